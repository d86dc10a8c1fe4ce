#ifndef BCOPS_EXPERIMENT_HPP_
#define BCOPS_EXPERIMENT_HPP_
#pragma once

#include "bcops/conformal.hpp"
#include "bcops/datagen.hpp"
#include "bcops/dataset.hpp"
#include "bcops/error.hpp"
#include "bcops/forest.hpp"
#include "bcops/metrics.hpp"
#include "bcops/noise.hpp"
#include "bcops/parallel.hpp"
#include "bcops/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace bcops {

enum class experiment_kind { example1, example2, mnist };

[[nodiscard]] constexpr std::string_view experiment_name(experiment_kind e) noexcept {
    switch (e) {
        case experiment_kind::example1:
            return "example1";
        case experiment_kind::example2:
            return "example2";
        case experiment_kind::mnist:
            return "mnist";
    }
    return "";
}

[[nodiscard]] inline experiment_kind parse_experiment(std::string_view name) {
    for (const auto e : { experiment_kind::example1, experiment_kind::example2, experiment_kind::mnist }) {
        if (experiment_name(e) == name) {
            return e;
        }
    }
    throw error{ "experiment: unknown value '" + std::string{ name } + "' (expected example1, example2 or mnist)" };
}

struct mnist_paths {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
};

/// Standard MNIST file names inside `dir`, preferring uncompressed copies over .gz ones.
[[nodiscard]] inline mnist_paths mnist_paths_in(const std::filesystem::path &dir) {
    const auto pick = [&dir](const std::string &stem) {
        const auto plain = dir / stem;
        const auto gz = dir / (stem + ".gz");
        return std::filesystem::exists(plain) || !std::filesystem::exists(gz) ? plain : gz;
    };
    return { pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"), pick("t10k-images-idx3-ubyte"), pick("t10k-labels-idx1-ubyte") };
}

/// Digits used for training in the MNIST experiment; the rest of the test set are outliers.
inline const std::set<std::uint8_t> mnist_training_digits{ 0, 1, 2, 3, 4, 5 };

/// Multiplier separating noise-level index from repetition in sweep cell stream ids.
inline constexpr std::uint64_t stream_id_stride = 1'000'000;

[[nodiscard]] inline std::vector<double> default_phi_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) {
        grid.push_back(static_cast<double>(i) / 20.0);
    }
    return grid;
}

[[nodiscard]] constexpr std::size_t default_repetitions(experiment_kind e) noexcept {
    switch (e) {
        case experiment_kind::example1:
            return 100;
        case experiment_kind::example2:
            return 20;
        case experiment_kind::mnist:
            return 5;
    }
    return 1;
}

struct experiment_config {
    experiment_kind experiment{ experiment_kind::example1 };
    double alpha{ 0.05 };
    std::vector<double> phi_grid{ default_phi_grid() };
    std::size_t repetitions{ default_repetitions(experiment_kind::example1) };
    forest_config forest{};
    /// Test-fold cap relative to class-fold size in each binary training set; unset disables it.
    std::optional<double> balance_cap{ 5.0 };
    std::uint64_t seed{ 1 };
    std::optional<mnist_paths> mnist{};
    /// Training rows drawn per digit class; unset uses every row.
    std::optional<std::size_t> mnist_per_class{ 500 };
    bool inclusive_resampling{ false };
    std::filesystem::path output_dir{ "results" };

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw error{ "alpha: " + std::to_string(alpha) + " outside (0, 1)" };
        }
        if (phi_grid.empty()) {
            throw error{ "phi_grid: empty" };
        }
        for (std::size_t i = 0; i < phi_grid.size(); ++i) {
            if (!(phi_grid[i] >= 0.0 && phi_grid[i] <= 1.0)) {
                throw error{ "phi_grid: value " + std::to_string(phi_grid[i]) + " outside [0, 1]" };
            }
            if (i > 0 && !(phi_grid[i] > phi_grid[i - 1])) {
                throw error{ "phi_grid: not strictly ascending at index " + std::to_string(i) };
            }
        }
        if (repetitions < 1) {
            throw error{ "repetitions: must be at least 1" };
        }
        if (forest.n_trees < 1) {
            throw error{ "forest.n_trees: must be at least 1" };
        }
        if (forest.min_node_size < 1) {
            throw error{ "forest.min_node_size: must be at least 1" };
        }
        if (forest.mtry && (*forest.mtry < 1 || *forest.mtry > synthetic_dimension) && experiment != experiment_kind::mnist) {
            throw error{ "forest.mtry: " + std::to_string(*forest.mtry) + " outside 1.." + std::to_string(synthetic_dimension) };
        }
        if (balance_cap && !(*balance_cap > 0.0)) {
            throw error{ "balance_cap: must be positive" };
        }
        if (experiment == experiment_kind::mnist) {
            if (!mnist) {
                throw error{ "mnist_paths: required when experiment is mnist" };
            }
            const std::pair<const char *, const std::filesystem::path *> fields[] = {
                { "mnist_paths.train_images", &mnist->train_images },
                { "mnist_paths.train_labels", &mnist->train_labels },
                { "mnist_paths.test_images", &mnist->test_images },
                { "mnist_paths.test_labels", &mnist->test_labels },
            };
            for (const auto &[name, path] : fields) {
                if (path->empty()) {
                    throw error{ std::string{ name } + ": missing" };
                }
                if (!std::filesystem::exists(*path)) {
                    throw error{ std::string{ name } + ": file not found: " + path->string() };
                }
            }
        }
    }
};

namespace detail {

inline const std::set<std::string> &known_config_fields() {
    static const std::set<std::string> fields{ "experiment", "alpha", "phi_grid", "repetitions", "forest", "balance_cap", "seed", "mnist_paths", "mnist_per_class", "inclusive_resampling", "output_dir" };
    return fields;
}

template <typename T>
T json_get(const nlohmann::json &j, const std::string &field) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw error{ field + ": " + e.what() };
    }
}

template <typename T>
std::optional<T> json_optional(const nlohmann::json &obj, const std::string &key, const std::string &field) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return std::nullopt;
    }
    return json_get<T>(obj.at(key), field);
}

}  // namespace detail

/**
 * Reads a configuration object. Absent fields keep their defaults; an
 * explicit null clears the optional ones (mtry, max_depth, balance_cap,
 * mnist_per_class). Unknown fields are rejected.
 */
[[nodiscard]] inline experiment_config config_from_json(const nlohmann::json &j) {
    if (!j.is_object()) {
        throw error{ "config: top level must be a JSON object" };
    }
    for (const auto &[key, value] : j.items()) {
        if (!detail::known_config_fields().contains(key)) {
            throw error{ "config: unknown field '" + key + "'" };
        }
    }

    experiment_config c;
    if (j.contains("experiment")) {
        c.experiment = parse_experiment(detail::json_get<std::string>(j.at("experiment"), "experiment"));
    }
    c.repetitions = default_repetitions(c.experiment);
    if (auto v = detail::json_optional<double>(j, "alpha", "alpha")) {
        c.alpha = *v;
    }
    if (auto v = detail::json_optional<std::vector<double>>(j, "phi_grid", "phi_grid")) {
        c.phi_grid = *v;
    }
    if (auto v = detail::json_optional<std::size_t>(j, "repetitions", "repetitions")) {
        c.repetitions = *v;
    }
    if (auto v = detail::json_optional<std::uint64_t>(j, "seed", "seed")) {
        c.seed = *v;
    }
    if (auto v = detail::json_optional<bool>(j, "inclusive_resampling", "inclusive_resampling")) {
        c.inclusive_resampling = *v;
    }
    if (auto v = detail::json_optional<std::string>(j, "output_dir", "output_dir")) {
        c.output_dir = *v;
    }
    if (j.contains("balance_cap")) {
        c.balance_cap = detail::json_optional<double>(j, "balance_cap", "balance_cap");
    }
    if (j.contains("mnist_per_class")) {
        c.mnist_per_class = detail::json_optional<std::size_t>(j, "mnist_per_class", "mnist_per_class");
    }
    if (j.contains("forest")) {
        const auto &f = j.at("forest");
        if (!f.is_object()) {
            throw error{ "forest: must be an object" };
        }
        for (const auto &[key, value] : f.items()) {
            if (key != "n_trees" && key != "mtry" && key != "min_node_size" && key != "max_depth") {
                throw error{ "config: unknown field 'forest." + key + "'" };
            }
        }
        if (auto v = detail::json_optional<std::size_t>(f, "n_trees", "forest.n_trees")) {
            c.forest.n_trees = *v;
        }
        if (auto v = detail::json_optional<std::size_t>(f, "min_node_size", "forest.min_node_size")) {
            c.forest.min_node_size = *v;
        }
        c.forest.mtry = detail::json_optional<std::size_t>(f, "mtry", "forest.mtry");
        c.forest.max_depth = detail::json_optional<std::size_t>(f, "max_depth", "forest.max_depth");
    }
    if (j.contains("mnist_paths") && !j.at("mnist_paths").is_null()) {
        const auto &m = j.at("mnist_paths");
        if (!m.is_object()) {
            throw error{ "mnist_paths: must be an object" };
        }
        mnist_paths paths;
        const std::pair<const char *, std::filesystem::path *> fields[] = {
            { "train_images", &paths.train_images },
            { "train_labels", &paths.train_labels },
            { "test_images", &paths.test_images },
            { "test_labels", &paths.test_labels },
        };
        for (const auto &[key, target] : fields) {
            if (auto v = detail::json_optional<std::string>(m, key, std::string{ "mnist_paths." } + key)) {
                *target = *v;
            }
        }
        c.mnist = paths;
    }
    return c;
}

[[nodiscard]] inline experiment_config load_config(const std::filesystem::path &path) {
    std::ifstream in{ path };
    if (!in) {
        throw error{ "cannot open config " + path.string() };
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw error{ path.string() + ": " + e.what() };
    }
    return config_from_json(j);
}

[[nodiscard]] inline nlohmann::json config_to_json(const experiment_config &c) {
    const auto opt = [](const auto &v) -> nlohmann::json {
        if (v) {
            return *v;
        }
        return nullptr;
    };
    nlohmann::json j{
        { "experiment", std::string{ experiment_name(c.experiment) } },
        { "alpha", c.alpha },
        { "phi_grid", c.phi_grid },
        { "repetitions", c.repetitions },
        { "forest", { { "n_trees", c.forest.n_trees }, { "mtry", opt(c.forest.mtry) }, { "min_node_size", c.forest.min_node_size }, { "max_depth", opt(c.forest.max_depth) } } },
        { "balance_cap", opt(c.balance_cap) },
        { "seed", c.seed },
        { "mnist_per_class", opt(c.mnist_per_class) },
        { "inclusive_resampling", c.inclusive_resampling },
        { "output_dir", c.output_dir.string() },
    };
    if (c.mnist) {
        j["mnist_paths"] = { { "train_images", c.mnist->train_images.string() },
                             { "train_labels", c.mnist->train_labels.string() },
                             { "test_images", c.mnist->test_images.string() },
                             { "test_labels", c.mnist->test_labels.string() } };
    } else {
        j["mnist_paths"] = nullptr;
    }
    return j;
}

/// One long-form result line.
struct sweep_row {
    std::string experiment;
    double phi{ 0.0 };
    std::size_t repetition{ 0 };
    metric_kind metric{ metric_kind::mean_coverage };
    std::optional<class_label> k{};
    double value{ 0.0 };

    friend bool operator==(const sweep_row &, const sweep_row &) = default;
};

[[nodiscard]] inline bool sweep_row_less(const sweep_row &a, const sweep_row &b) {
    const auto key = [](const sweep_row &r) { return std::tuple{ r.phi, r.repetition, metric_name(r.metric), r.k ? r.k->id : 0U }; };
    return key(a) < key(b);
}

struct sweep_result {
    std::vector<sweep_row> rows;
    /// Warnings from every cell, prefixed with the cell's (phi, repetition).
    std::vector<std::string> warnings;
    /// Raw source token for each canonical class id, for reports.
    std::map<std::uint32_t, std::string> class_names;

    [[nodiscard]] std::vector<repetition_record> records() const {
        std::vector<repetition_record> out;
        out.reserve(rows.size());
        for (const auto &r : rows) {
            out.push_back({ r.repetition, r.phi, { r.metric, r.k, r.value } });
        }
        return out;
    }
};

/// Training and test data for one sweep cell, before label noise.
struct cell_data {
    labeled_dataset train;
    unlabeled_dataset test;
};

/// MNIST digits 0-5 for training and the full test set, decoded once per sweep.
struct mnist_cache {
    labeled_dataset train;
    unlabeled_dataset test;
    std::map<std::uint8_t, class_label> mapping;
};

[[nodiscard]] inline mnist_cache load_mnist_cache(const mnist_paths &paths) {
    const auto train_raw = filter_digits(load_mnist({ paths.train_images, paths.train_labels, mnist_source::role::train }), mnist_training_digits);
    const auto test_raw = load_mnist({ paths.test_images, paths.test_labels, mnist_source::role::test });
    auto canonical = relabel_to_canonical(train_raw.digits);

    std::vector<truth> truths;
    truths.reserve(test_raw.size());
    for (const std::uint8_t d : test_raw.digits) {
        const auto it = canonical.mapping.find(d);
        if (it == canonical.mapping.end()) {
            truths.emplace_back(outlier_mark{});
        } else {
            truths.emplace_back(it->second);
        }
    }
    const auto class_count = static_cast<std::uint32_t>(canonical.mapping.size());
    return { labeled_dataset{ train_raw.features, std::move(canonical.labels), class_count },
             unlabeled_dataset{ test_raw.features, std::move(truths) },
             std::move(canonical.mapping) };
}

/// Stream for sweep cell (phi index, repetition).
[[nodiscard]] inline rng_stream cell_stream(const experiment_config &config, std::size_t phi_index, std::size_t repetition) {
    return { config.seed, static_cast<std::uint64_t>(phi_index) * stream_id_stride + repetition };
}

/// Generates (or subsamples) the data for one cell.
[[nodiscard]] inline cell_data make_cell_data(const experiment_config &config, const rng_stream &cell, const mnist_cache *mnist) {
    switch (config.experiment) {
        case experiment_kind::example1:
            return { gen_example1_train(cell.derive(1)), gen_example1_test(cell.derive(2)) };
        case experiment_kind::example2: {
            auto [train, test] = gen_example2(cell.derive(1));
            return { std::move(train), std::move(test) };
        }
        case experiment_kind::mnist: {
            if (mnist == nullptr) {
                throw error{ "mnist data not loaded" };
            }
            if (config.mnist_per_class && *config.mnist_per_class > 0) {
                return { stratified_subsample(mnist->train, *config.mnist_per_class, cell.derive(5)), mnist->test };
            }
            return { mnist->train, mnist->test };
        }
    }
    throw error{ "unknown experiment" };
}

struct cell_outcome {
    std::vector<sweep_row> rows;
    std::vector<std::string> warnings;
};

/// Noise, fit, predict and evaluate for one (phi, repetition) cell.
[[nodiscard]] inline cell_outcome run_cell(const experiment_config &config, std::size_t phi_index, std::size_t repetition, const mnist_cache *mnist) {
    const double phi = config.phi_grid.at(phi_index);
    const rng_stream cell = cell_stream(config, phi_index, repetition);
    try {
        const cell_data data = make_cell_data(config, cell, mnist);
        const corruption_spec noise{ phi, data.train.class_count(), config.inclusive_resampling };
        const labeled_dataset noisy = data.train.with_labels(corrupt_labels(data.train.labels(), noise, cell.derive(3)));

        const bcops_model model = fit_bcops(noisy, data.test, config.forest, config.alpha, cell.derive(4), { config.balance_cap, 1 });
        const evaluation_frame frame{ predict_all(model), *data.test.ground_truth() };

        cell_outcome out;
        for (const metric_record &m : evaluate(frame)) {
            out.rows.push_back({ std::string{ experiment_name(config.experiment) }, phi, repetition, m.metric, m.k, m.value });
        }
        for (const fit_warning &w : model.warnings()) {
            out.warnings.push_back("phi=" + std::to_string(phi) + " repetition=" + std::to_string(repetition) + ": " + w.message);
        }
        return out;
    } catch (const std::exception &e) {
        throw error{ "phi=" + std::to_string(phi) + " repetition=" + std::to_string(repetition) + ": " + e.what() };
    }
}

/// Class display names for the configured experiment.
[[nodiscard]] inline std::map<std::uint32_t, std::string> class_names_for(const experiment_config &config, const mnist_cache *mnist) {
    std::map<std::uint32_t, std::string> names;
    if (config.experiment == experiment_kind::mnist && mnist != nullptr) {
        for (const auto &[digit, label] : mnist->mapping) {
            names[label.id] = std::to_string(digit);
        }
        return names;
    }
    const std::uint32_t k = config.experiment == experiment_kind::example1 ? 2 : example2::class_count;
    for (std::uint32_t i = 1; i <= k; ++i) {
        names[i] = std::to_string(i);
    }
    return names;
}

/**
 * Runs every (phi, repetition) cell of the sweep on `threads` workers.
 *
 * Cell (i, r) draws everything from stream (seed, i * 1e6 + r), so the result
 * is identical for any thread count.
 */
[[nodiscard]] inline sweep_result run_sweep(const experiment_config &config, std::size_t threads = 1) {
    config.validate();
    std::optional<mnist_cache> mnist;
    if (config.experiment == experiment_kind::mnist) {
        mnist = load_mnist_cache(*config.mnist);
    }
    const mnist_cache *mnist_ptr = mnist ? &*mnist : nullptr;

    const std::size_t cells = config.phi_grid.size() * config.repetitions;
    std::vector<cell_outcome> outcomes(cells);
    parallel_for(cells, threads, [&](std::size_t c) {
        outcomes[c] = run_cell(config, c / config.repetitions, c % config.repetitions, mnist_ptr);
    });

    sweep_result result;
    result.class_names = class_names_for(config, mnist_ptr);
    for (auto &o : outcomes) {
        result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
        result.warnings.insert(result.warnings.end(), o.warnings.begin(), o.warnings.end());
    }
    std::stable_sort(result.rows.begin(), result.rows.end(), sweep_row_less);
    return result;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view csv_header = "experiment,phi,repetition,metric,class,value";

[[nodiscard]] inline std::string format_csv_row(const sweep_row &r) {
    char buffer[256];
    std::snprintf(buffer, sizeof buffer, "%s,%.4f,%zu,%s,%s,%.6f", r.experiment.c_str(), r.phi, r.repetition, std::string{ metric_name(r.metric) }.c_str(), r.k ? std::to_string(r.k->id).c_str() : "", r.value);
    return buffer;
}

[[nodiscard]] inline std::string to_csv(const std::vector<sweep_row> &rows) {
    std::string out{ csv_header };
    out += '\n';
    for (const auto &r : rows) {
        out += format_csv_row(r);
        out += '\n';
    }
    return out;
}

namespace detail {

inline void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out{ path, std::ios::binary | std::ios::trunc };
    if (!out) {
        throw error{ "cannot open " + path.string() + " for writing" };
    }
    out << text;
    out.flush();
    if (!out) {
        throw error{ "write failed for " + path.string() };
    }
}

inline std::vector<std::string> split_fields(const std::string &line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in{ line };
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

}  // namespace detail

inline void write_csv(const sweep_result &result, const std::filesystem::path &path) {
    detail::write_text(path, to_csv(result.rows));
}

[[nodiscard]] inline std::vector<sweep_row> parse_csv(std::istream &in, const std::string &source = "csv") {
    std::string line;
    if (!std::getline(in, line) || line != csv_header) {
        throw error{ source + ": missing header '" + std::string{ csv_header } + "'" };
    }
    std::vector<sweep_row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = detail::split_fields(line);
        if (fields.size() != 6) {
            throw error{ source + ":" + std::to_string(line_no) + ": expected 6 fields, got " + std::to_string(fields.size()) };
        }
        try {
            sweep_row r;
            r.experiment = fields[0];
            r.phi = std::stod(fields[1]);
            r.repetition = std::stoul(fields[2]);
            r.metric = parse_metric(fields[3]);
            if (!fields[4].empty()) {
                r.k = class_label{ static_cast<std::uint32_t>(std::stoul(fields[4])) };
            }
            r.value = std::stod(fields[5]);
            rows.push_back(std::move(r));
        } catch (const std::exception &e) {
            throw error{ source + ":" + std::to_string(line_no) + ": " + e.what() };
        }
    }
    return rows;
}

[[nodiscard]] inline std::vector<sweep_row> read_csv(const std::filesystem::path &path) {
    std::ifstream in{ path };
    if (!in) {
        throw error{ "cannot open " + path.string() };
    }
    return parse_csv(in, path.string());
}

inline void write_summary_csv(const std::vector<summary_row> &rows, const std::filesystem::path &path) {
    std::string out = "phi,metric,class,mean,sd,n_reps\n";
    char buffer[256];
    for (const auto &r : rows) {
        std::snprintf(buffer, sizeof buffer, "%.4f,%s,%s,%.6f,%.6f,%zu\n", r.phi, std::string{ metric_name(r.metric) }.c_str(), r.k ? std::to_string(r.k->id).c_str() : "", r.mean, r.sd, r.n_reps);
        out += buffer;
    }
    detail::write_text(path, out);
}

/// Run metadata: configuration echo, stream-id rule, class names and warnings.
inline void write_metadata(const sweep_result &result, const experiment_config &config, const std::filesystem::path &path) {
    nlohmann::json classes = nlohmann::json::object();
    for (const auto &[id, name] : result.class_names) {
        classes[std::to_string(id)] = name;
    }
    const nlohmann::json j{
        { "config", config_to_json(config) },
        { "stream_id_rule", "cell (phi index i, repetition r) uses stream (seed, i * 1000000 + r)" },
        { "stream_id_stride", stream_id_stride },
        { "sd_with_single_repetition", "reported as 0" },
        { "class_names", classes },
        { "warnings", result.warnings },
    };
    detail::write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// SVG line plots
// ---------------------------------------------------------------------------

struct plot_options {
    /// Draws a reference line at 1 - alpha on coverage plots.
    std::optional<double> alpha{};
    std::string title{};
    std::map<std::uint32_t, std::string> class_names{};
};

struct plot_geometry {
    static constexpr double width = 640.0;
    static constexpr double height = 440.0;
    static constexpr double left = 60.0;
    static constexpr double right = 500.0;
    static constexpr double top = 40.0;
    static constexpr double bottom = 390.0;

    [[nodiscard]] static constexpr double x(double phi) noexcept { return left + phi * (right - left); }
    [[nodiscard]] static constexpr double y(double value) noexcept { return bottom - value * (bottom - top); }
};

namespace detail {

inline std::string fmt_coord(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.2f", v);
    return buffer;
}

inline std::string xml_escape(const std::string &s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Standalone SVG with one polyline per series of `metric` in `rows`.
[[nodiscard]] inline std::string render_lineplot_svg(const std::vector<summary_row> &rows, metric_kind metric, const plot_options &options = {}) {
    using g = plot_geometry;
    using detail::fmt_coord;
    static constexpr std::string_view palette[] = { "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf" };

    std::map<std::uint32_t, std::vector<std::pair<double, double>>> series;
    for (const auto &r : rows) {
        if (r.metric == metric) {
            series[r.k ? r.k->id : 0U].emplace_back(r.phi, r.mean);
        }
    }
    if (series.empty()) {
        throw error{ "render_lineplot: no rows for metric " + std::string{ metric_name(metric) } };
    }

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g::width << "\" height=\"" << g::height << "\" viewBox=\"0 0 " << g::width << ' ' << g::height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << g::width << "\" height=\"" << g::height << "\" fill=\"white\"/>\n";
    const std::string title = options.title.empty() ? std::string{ metric_name(metric) } : options.title;
    svg << "<text x=\"" << fmt_coord((g::left + g::right) / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" << detail::xml_escape(title) << "</text>\n";

    svg << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << fmt_coord(g::left) << "\" y1=\"" << fmt_coord(g::bottom) << "\" x2=\"" << fmt_coord(g::right) << "\" y2=\"" << fmt_coord(g::bottom) << "\"/>\n";
    svg << "<line x1=\"" << fmt_coord(g::left) << "\" y1=\"" << fmt_coord(g::top) << "\" x2=\"" << fmt_coord(g::left) << "\" y2=\"" << fmt_coord(g::bottom) << "\"/>\n";
    for (int i = 0; i <= 10; ++i) {
        const double t = i / 10.0;
        svg << "<line x1=\"" << fmt_coord(g::x(t)) << "\" y1=\"" << fmt_coord(g::bottom) << "\" x2=\"" << fmt_coord(g::x(t)) << "\" y2=\"" << fmt_coord(g::bottom + 5) << "\"/>\n";
        svg << "<line x1=\"" << fmt_coord(g::left - 5) << "\" y1=\"" << fmt_coord(g::y(t)) << "\" x2=\"" << fmt_coord(g::left) << "\" y2=\"" << fmt_coord(g::y(t)) << "\"/>\n";
    }
    svg << "</g>\n";
    svg << "<g class=\"tick-labels\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 10; ++i) {
        const double t = i / 10.0;
        char label[8];
        std::snprintf(label, sizeof label, "%.1f", t);
        svg << "<text x=\"" << fmt_coord(g::x(t)) << "\" y=\"" << fmt_coord(g::bottom + 18) << "\" text-anchor=\"middle\">" << label << "</text>\n";
        svg << "<text x=\"" << fmt_coord(g::left - 8) << "\" y=\"" << fmt_coord(g::y(t) + 4) << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
    svg << "<text x=\"" << fmt_coord((g::left + g::right) / 2) << "\" y=\"" << fmt_coord(g::bottom + 40) << "\" text-anchor=\"middle\" font-size=\"13\">noise level (phi)</text>\n";
    svg << "<text x=\"16\" y=\"" << fmt_coord((g::top + g::bottom) / 2) << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << fmt_coord((g::top + g::bottom) / 2) << ")\">" << metric_name(metric) << "</text>\n";
    svg << "</g>\n";

    const bool coverage = metric == metric_kind::class_coverage || metric == metric_kind::mean_coverage;
    if (coverage && options.alpha) {
        const double level = 1.0 - *options.alpha;
        svg << "<line class=\"reference\" x1=\"" << fmt_coord(g::left) << "\" y1=\"" << fmt_coord(g::y(level)) << "\" x2=\"" << fmt_coord(g::right) << "\" y2=\"" << fmt_coord(g::y(level)) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    }

    std::size_t index = 0;
    double legend_y = g::top + 10;
    for (auto &[id, points] : series) {
        std::sort(points.begin(), points.end());
        const std::string_view colour = palette[index % std::size(palette)];
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < points.size(); ++i) {
            svg << (i == 0 ? "" : " ") << fmt_coord(g::x(points[i].first)) << ',' << fmt_coord(g::y(points[i].second));
        }
        svg << "\"/>\n";

        std::string name;
        if (id == 0) {
            name = std::string{ metric_name(metric) };
        } else {
            const auto it = options.class_names.find(id);
            name = "class " + (it == options.class_names.end() ? std::to_string(id) : it->second);
        }
        svg << "<rect x=\"" << fmt_coord(g::right + 15) << "\" y=\"" << fmt_coord(legend_y - 9) << "\" width=\"14\" height=\"4\" fill=\"" << colour << "\"/>\n";
        svg << "<text x=\"" << fmt_coord(g::right + 35) << "\" y=\"" << fmt_coord(legend_y - 3) << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(name) << "</text>\n";
        legend_y += 18;
        ++index;
    }
    if (coverage && options.alpha) {
        char label[32];
        std::snprintf(label, sizeof label, "target %.2f", 1.0 - *options.alpha);
        svg << "<text x=\"" << fmt_coord(g::right + 35) << "\" y=\"" << fmt_coord(legend_y - 3) << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"gray\">" << label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

inline void render_lineplot(const std::vector<summary_row> &rows, metric_kind metric, const std::filesystem::path &path, const plot_options &options = {}) {
    detail::write_text(path, render_lineplot_svg(rows, metric, options));
}

}  // namespace bcops

#endif  // BCOPS_EXPERIMENT_HPP_
