#ifndef BCOPS_CLI_HPP_
#define BCOPS_CLI_HPP_
#pragma once

#include "bcops/error.hpp"
#include "bcops/experiment.hpp"
#include "bcops/metrics.hpp"
#include "bcops/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace bcops {

namespace cli_exit {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int usage = 2;
}  // namespace cli_exit

/// Worker count: explicit flag, then BCOPS_THREADS, then hardware concurrency.
[[nodiscard]] inline std::size_t resolve_threads(std::optional<std::size_t> flag) {
    if (flag && *flag > 0) {
        return *flag;
    }
    if (const char *env = std::getenv("BCOPS_THREADS"); env != nullptr && *env != '\0') {
        try {
            const unsigned long v = std::stoul(env);
            if (v > 0) {
                return v;
            }
        } catch (const std::exception &) {
            throw error{ std::string{ "BCOPS_THREADS: not a positive integer: " } + env };
        }
    }
    return default_thread_count();
}

namespace detail {

struct run_args {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> reps;
};

inline experiment_config resolve_config(const run_args &args) {
    experiment_config config = args.config.empty() ? experiment_config{} : load_config(args.config);
    if (args.out) {
        config.output_dir = *args.out;
    }
    if (args.seed) {
        config.seed = *args.seed;
    }
    if (args.reps) {
        config.repetitions = *args.reps;
    }
    return config;
}

inline void write_run_outputs(const sweep_result &result, const experiment_config &config) {
    std::filesystem::create_directories(config.output_dir);
    write_csv(result, config.output_dir / "results.csv");
    const auto summary = aggregate(result.records());
    write_summary_csv(summary, config.output_dir / "summary.csv");
    write_metadata(result, config, config.output_dir / "metadata.json");
    for (const metric_kind m : { metric_kind::class_coverage, metric_kind::mean_coverage, metric_kind::abstention_rate }) {
        plot_options options;
        options.alpha = config.alpha;
        options.class_names = result.class_names;
        options.title = std::string{ experiment_name(config.experiment) } + ": " + std::string{ metric_name(m) };
        render_lineplot(summary, m, config.output_dir / (std::string{ metric_name(m) } + ".svg"), options);
    }
}

}  // namespace detail

/**
 * Entry point behind the `bcops` executable.
 *
 * Subcommands: `run` (sweep, writes CSV/JSON/SVG into the output directory),
 * `plot` (SVG from a results CSV) and `validate` (config check plus a dry
 * data load). Returns 0 on success, 1 on runtime failure, 2 on usage errors.
 */
inline int cli_main(const std::vector<std::string> &args, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    CLI::App app{ "BCOPS conformal prediction sets under label noise", "bcops" };
    app.require_subcommand(1);

    detail::run_args run;
    auto *run_cmd = app.add_subcommand("run", "Run a noise sweep and write results.csv, summary.csv, metadata.json and SVG plots");
    run_cmd->add_option("--config", run.config, "JSON experiment config")->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run.out, "Output directory (overrides output_dir)");
    run_cmd->add_option("--seed", run.seed, "Base seed (overrides seed)");
    run_cmd->add_option("--threads", run.threads, "Worker threads (default: BCOPS_THREADS or all cores)");
    run_cmd->add_option("--reps", run.reps, "Repetitions per noise level (overrides repetitions)");

    std::string plot_csv;
    std::string plot_metric;
    std::string plot_out;
    double plot_alpha = 0.05;
    auto *plot_cmd = app.add_subcommand("plot", "Render an SVG line plot of one metric from a results CSV");
    plot_cmd->add_option("--csv", plot_csv, "results.csv written by run")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--metric", plot_metric, "class_coverage, mean_coverage or abstention_rate")->required();
    plot_cmd->add_option("--out", plot_out, "Output SVG path")->required();
    plot_cmd->add_option("--alpha", plot_alpha, "Miscoverage level for the reference line")->capture_default_str();

    std::string validate_config;
    auto *validate_cmd = app.add_subcommand("validate", "Parse a config and dry-run its data loading");
    validate_cmd->add_option("--config", validate_config, "JSON experiment config")->required()->check(CLI::ExistingFile);

    std::vector<std::string> argv_storage{ "bcops" };
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto &a : argv_storage) {
        argv.push_back(a.data());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return cli_exit::ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return cli_exit::ok;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n" << app.help();
        return cli_exit::usage;
    }

    try {
        if (*run_cmd) {
            const experiment_config config = detail::resolve_config(run);
            config.validate();
            const std::size_t threads = resolve_threads(run.threads);
            const auto start = std::chrono::steady_clock::now();
            const sweep_result result = run_sweep(config, threads);
            detail::write_run_outputs(result, config);
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            out << "wrote " << result.rows.size() << " rows to " << (config.output_dir / "results.csv").string() << " in " << elapsed.count() << " s (" << threads << " threads, " << result.warnings.size() << " warnings)\n";
        } else if (*plot_cmd) {
            const auto rows = read_csv(plot_csv);
            std::vector<repetition_record> records;
            for (const auto &r : rows) {
                records.push_back({ r.repetition, r.phi, { r.metric, r.k, r.value } });
            }
            plot_options options;
            options.alpha = plot_alpha;
            const metric_kind metric = parse_metric(plot_metric);
            render_lineplot(aggregate(records), metric, plot_out, options);
            out << "wrote " << plot_out << "\n";
        } else if (*validate_cmd) {
            const experiment_config config = load_config(validate_config);
            config.validate();
            std::optional<mnist_cache> mnist;
            if (config.experiment == experiment_kind::mnist) {
                mnist = load_mnist_cache(*config.mnist);
            }
            const cell_data data = make_cell_data(config, cell_stream(config, 0, 0), mnist ? &*mnist : nullptr);
            out << "ok: " << experiment_name(config.experiment) << ", " << config.phi_grid.size() << " noise levels x " << config.repetitions << " repetitions; train " << data.train.size() << "x" << data.train.feature_count() << " (" << data.train.class_count() << " classes), test " << data.test.size() << " rows\n";
        }
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return cli_exit::failure;
    }
    return cli_exit::ok;
}

}  // namespace bcops

#endif  // BCOPS_CLI_HPP_
