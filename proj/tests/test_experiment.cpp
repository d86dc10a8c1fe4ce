#include "bcops/experiment.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace {

using bcops::experiment_config;
using bcops::experiment_kind;
using bcops::metric_kind;
using bcops::sweep_row;
using bcops::testing::temp_dir;
using nlohmann::json;

experiment_config tiny_config(std::vector<double> grid = { 0.0 }, std::size_t reps = 1, std::size_t trees = 5) {
    experiment_config c;
    c.phi_grid = std::move(grid);
    c.repetitions = reps;
    c.forest.n_trees = trees;
    return c;
}

std::string error_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const bcops::error &e) {
        return e.what();
    }
    return "";
}

TEST(Config, Defaults) {
    const auto c = bcops::config_from_json(json::object());
    EXPECT_EQ(c.experiment, experiment_kind::example1);
    EXPECT_DOUBLE_EQ(c.alpha, 0.05);
    EXPECT_EQ(c.phi_grid.size(), 21U);
    EXPECT_DOUBLE_EQ(c.phi_grid[1], 0.05);
    EXPECT_DOUBLE_EQ(c.phi_grid.back(), 1.0);
    EXPECT_EQ(c.repetitions, 100U);
    EXPECT_EQ(c.forest.n_trees, 100U);
    EXPECT_EQ(c.forest.min_node_size, 5U);
    EXPECT_FALSE(c.forest.mtry.has_value());
    EXPECT_EQ(c.seed, 1U);
    EXPECT_FALSE(c.inclusive_resampling);
    EXPECT_EQ(bcops::config_from_json(json{ { "experiment", "example2" } }).repetitions, 20U);
    EXPECT_EQ(bcops::config_from_json(json{ { "experiment", "mnist" } }).repetitions, 5U);
}

TEST(Config, Overrides) {
    const auto c = bcops::config_from_json(json::parse(R"({
        "experiment": "example2", "alpha": 0.1, "phi_grid": [0, 0.5], "repetitions": 3,
        "forest": {"n_trees": 7, "mtry": 2, "min_node_size": 1, "max_depth": 4},
        "balance_cap": null, "seed": 99, "inclusive_resampling": true, "output_dir": "out"
    })"));
    EXPECT_EQ(c.experiment, experiment_kind::example2);
    EXPECT_DOUBLE_EQ(c.alpha, 0.1);
    EXPECT_EQ(c.phi_grid, (std::vector<double>{ 0.0, 0.5 }));
    EXPECT_EQ(c.repetitions, 3U);
    EXPECT_EQ(c.forest.n_trees, 7U);
    EXPECT_EQ(c.forest.mtry, 2U);
    EXPECT_EQ(c.forest.max_depth, 4U);
    EXPECT_FALSE(c.balance_cap.has_value());
    EXPECT_EQ(c.seed, 99U);
    EXPECT_TRUE(c.inclusive_resampling);
    EXPECT_EQ(c.output_dir, "out");
    const auto back = bcops::config_from_json(bcops::config_to_json(c));
    EXPECT_EQ(bcops::config_to_json(back), bcops::config_to_json(c));
}

TEST(Config, RejectsUnknownAndInvalid) {
    EXPECT_NE(error_of([] { (void) bcops::config_from_json(json{ { "alpah", 0.1 } }); }).find("alpah"), std::string::npos);
    EXPECT_NE(error_of([] { (void) bcops::config_from_json(json{ { "forest", { { "trees", 3 } } } }); }).find("forest.trees"), std::string::npos);
    EXPECT_NE(error_of([] { (void) bcops::config_from_json(json{ { "experiment", "cifar" } }); }).find("cifar"), std::string::npos);
    EXPECT_NE(error_of([] { (void) bcops::config_from_json(json{ { "alpha", "high" } }); }).find("alpha"), std::string::npos);
    EXPECT_NE(error_of([] { tiny_config({ 0.5, 0.2 }).validate(); }).find("phi_grid"), std::string::npos);
    EXPECT_NE(error_of([] { tiny_config({ 1.5 }).validate(); }).find("phi_grid"), std::string::npos);
    EXPECT_NE(error_of([] { tiny_config({}).validate(); }).find("phi_grid"), std::string::npos);
    auto c = tiny_config();
    c.alpha = 1.0;
    EXPECT_NE(error_of([&] { c.validate(); }).find("alpha"), std::string::npos);
}

TEST(Config, MnistPathsAreChecked) {
    auto c = tiny_config();
    c.experiment = experiment_kind::mnist;
    EXPECT_NE(error_of([&] { c.validate(); }).find("mnist_paths"), std::string::npos);
    c.mnist = bcops::mnist_paths{ "/nonexistent/a", "/nonexistent/b", "/nonexistent/c", "/nonexistent/d" };
    const auto message = error_of([&] { (void) bcops::run_sweep(c); });
    EXPECT_NE(message.find("mnist_paths.train_images"), std::string::npos) << message;
    EXPECT_NE(message.find("/nonexistent/a"), std::string::npos) << message;
    c.mnist->train_images.clear();
    EXPECT_NE(error_of([&] { c.validate(); }).find("mnist_paths.train_images: missing"), std::string::npos);
}

TEST(Config, ShippedConfigsParse) {
    const std::filesystem::path dir = std::filesystem::path{ BCOPS_SOURCE_DIR } / "configs";
    const auto e1 = bcops::load_config(dir / "example1.json");
    EXPECT_EQ(e1.phi_grid, bcops::default_phi_grid());
    EXPECT_NO_THROW(e1.validate());
    EXPECT_NO_THROW(bcops::load_config(dir / "example2.json").validate());
    const auto m = bcops::load_config(dir / "mnist.json");
    EXPECT_EQ(m.experiment, experiment_kind::mnist);
    ASSERT_TRUE(m.mnist.has_value());
    EXPECT_EQ(m.mnist_per_class, 500U);
}

TEST(Sweep, OneCellGivesFourRows) {
    const auto result = bcops::run_sweep(tiny_config());
    ASSERT_EQ(result.rows.size(), 4U);
    EXPECT_EQ(result.rows[0].metric, metric_kind::abstention_rate);
    EXPECT_EQ(result.rows[1].metric, metric_kind::class_coverage);
    EXPECT_EQ(result.rows[1].k, bcops::class_label{ 1 });
    EXPECT_EQ(result.rows[2].k, bcops::class_label{ 2 });
    EXPECT_EQ(result.rows[3].metric, metric_kind::mean_coverage);
    for (const auto &r : result.rows) {
        EXPECT_EQ(r.experiment, "example1");
        EXPECT_GE(r.value, 0.0);
        EXPECT_LE(r.value, 1.0);
    }
    EXPECT_EQ(result.class_names.size(), 2U);
}

TEST(Sweep, CellStreamsFollowTheStrideRule) {
    auto c = tiny_config();
    c.seed = 7;
    EXPECT_EQ(bcops::cell_stream(c, 3, 11), (bcops::rng_stream{ 7, 3'000'011 }));
}

TEST(Sweep, ByteIdenticalAcrossRunsAndThreads) {
    const auto c = tiny_config({ 0.0, 0.3 }, 2);
    const auto a = bcops::to_csv(bcops::run_sweep(c, 1).rows);
    const auto b = bcops::to_csv(bcops::run_sweep(c, 1).rows);
    const auto d = bcops::to_csv(bcops::run_sweep(c, 3).rows);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, d);
    auto other = c;
    other.seed = 2;
    EXPECT_NE(a, bcops::to_csv(bcops::run_sweep(other, 1).rows));
}

TEST(Sweep, SubsetOfGridReproducesCells) {
    // cell (i, r) is fixed by its own stream: a longer run contains the shorter one
    const auto short_run = bcops::run_sweep(tiny_config({ 0.0 }, 1)).rows;
    const auto long_run = bcops::run_sweep(tiny_config({ 0.0 }, 2)).rows;
    std::vector<sweep_row> first;
    for (const auto &r : long_run) {
        if (r.repetition == 0) {
            first.push_back(r);
        }
    }
    EXPECT_EQ(first, short_run);
}

TEST(Sweep, CostScalesRoughlyLinearlyInCells) {
    const auto time_of = [](std::size_t reps) {
        const auto start = std::chrono::steady_clock::now();
        (void) bcops::run_sweep(tiny_config({ 0.0 }, reps), 1);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    (void) time_of(1);
    const double one = time_of(2);
    const double two = time_of(4);
    EXPECT_LT(two / one, 4.0);
    EXPECT_GT(two / one, 1.0);
}

sweep_row row(double phi, std::size_t rep, metric_kind m, std::optional<std::uint32_t> k, double v) {
    sweep_row r{ "example1", phi, rep, m, std::nullopt, v };
    if (k) {
        r.k = bcops::class_label{ *k };
    }
    return r;
}

TEST(Csv, HeaderOnlyForNoRows) {
    EXPECT_EQ(bcops::to_csv({}), "experiment,phi,repetition,metric,class,value\n");
}

TEST(Csv, OneRowIsTwoLines) {
    const auto text = bcops::to_csv({ row(0.05, 3, metric_kind::class_coverage, 2, 0.9512345678) });
    EXPECT_EQ(text, "experiment,phi,repetition,metric,class,value\nexample1,0.0500,3,class_coverage,2,0.951235\n");
    EXPECT_EQ(bcops::format_csv_row(row(0.5, 0, metric_kind::abstention_rate, std::nullopt, 1.0)), "example1,0.5000,0,abstention_rate,,1.000000");
}

TEST(Csv, RoundTrip) {
    const std::vector<sweep_row> rows{
        row(0.0, 0, metric_kind::abstention_rate, std::nullopt, 0.812),
        row(0.0, 0, metric_kind::class_coverage, 1, 0.954),
        row(0.25, 1, metric_kind::mean_coverage, std::nullopt, 0.5),
    };
    std::istringstream in{ bcops::to_csv(rows) };
    EXPECT_EQ(bcops::parse_csv(in), rows);
}

TEST(Csv, ParseErrorsNameTheLine) {
    std::istringstream bad_header{ "a,b\n" };
    EXPECT_NE(error_of([&] { (void) bcops::parse_csv(bad_header, "f.csv"); }).find("f.csv"), std::string::npos);
    std::istringstream short_row{ std::string{ bcops::csv_header } + "\nexample1,0.1\n" };
    EXPECT_NE(error_of([&] { (void) bcops::parse_csv(short_row, "f.csv"); }).find("f.csv:2"), std::string::npos);
}

TEST(Csv, WriteFailureNamesThePath) {
    const temp_dir dir;
    const auto target = dir / "no_such_dir" / "results.csv";
    const auto message = error_of([&] { bcops::write_csv({}, target); });
    EXPECT_NE(message.find(target.string()), std::string::npos) << message;
    EXPECT_NE(error_of([&] { (void) bcops::read_csv(target); }).find(target.string()), std::string::npos);
}

// Checks that every opened element is closed in order.
bool tags_balanced(const std::string &xml) {
    static const std::regex tag{ R"(<(/?)([A-Za-z][A-Za-z0-9]*)[^>]*?(/?)>)" };
    std::vector<std::string> stack;
    for (auto it = std::sregex_iterator(xml.begin(), xml.end(), tag); it != std::sregex_iterator(); ++it) {
        const auto &m = *it;
        if (m[3].length() > 0) {
            continue;
        }
        if (m[1].length() > 0) {
            if (stack.empty() || stack.back() != m[2].str()) {
                return false;
            }
            stack.pop_back();
        } else {
            stack.push_back(m[2].str());
        }
    }
    return stack.empty();
}

std::size_t count_of(const std::string &text, const std::string &needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

std::vector<bcops::summary_row> coverage_summary() {
    std::vector<bcops::summary_row> rows;
    for (const double phi : { 0.0, 0.5, 1.0 }) {
        for (const std::uint32_t k : { 1U, 2U }) {
            rows.push_back({ phi, metric_kind::class_coverage, bcops::class_label{ k }, 0.9 + 0.01 * k, 0.01, 3 });
        }
        rows.push_back({ phi, metric_kind::abstention_rate, std::nullopt, 0.5, 0.1, 3 });
    }
    return rows;
}

TEST(Svg, WellFormedWithSeriesAndReference) {
    bcops::plot_options options;
    options.alpha = 0.05;
    options.class_names = { { 1, "cats & dogs" } };
    const auto svg = bcops::render_lineplot_svg(coverage_summary(), metric_kind::class_coverage, options);
    EXPECT_EQ(svg.rfind("<?xml version=\"1.0\"", 0), 0U);
    EXPECT_TRUE(tags_balanced(svg));
    EXPECT_EQ(count_of(svg, "<polyline"), 2U);
    EXPECT_EQ(count_of(svg, "class=\"reference\""), 1U);
    const std::string y = bcops::detail::fmt_coord(bcops::plot_geometry::y(0.95));
    EXPECT_NE(svg.find("class=\"reference\" x1=\"60.00\" y1=\"" + y + "\" x2=\"500.00\" y2=\"" + y + "\""), std::string::npos) << y;
    EXPECT_NE(svg.find("cats &amp; dogs"), std::string::npos);
    EXPECT_NE(svg.find("class 2"), std::string::npos);
}

TEST(Svg, NoReferenceOnAbstention) {
    bcops::plot_options options;
    options.alpha = 0.05;
    const auto svg = bcops::render_lineplot_svg(coverage_summary(), metric_kind::abstention_rate, options);
    EXPECT_EQ(count_of(svg, "<polyline"), 1U);
    EXPECT_EQ(count_of(svg, "class=\"reference\""), 0U);
    EXPECT_TRUE(tags_balanced(svg));
}

TEST(Svg, NoRowsIsAnError) {
    const auto message = error_of([] { (void) bcops::render_lineplot_svg(coverage_summary(), metric_kind::mean_coverage); });
    EXPECT_NE(message.find("mean_coverage"), std::string::npos);
}

TEST(Svg, WritesFile) {
    const temp_dir dir;
    bcops::render_lineplot(coverage_summary(), metric_kind::class_coverage, dir / "plot.svg");
    EXPECT_TRUE(tags_balanced(bcops::testing::read_text(dir / "plot.svg")));
}

TEST(Metadata, RecordsConfigAndStreamRule) {
    const temp_dir dir;
    const auto c = tiny_config();
    const auto result = bcops::run_sweep(c);
    bcops::write_metadata(result, c, dir / "metadata.json");
    const auto j = json::parse(bcops::testing::read_text(dir / "metadata.json"));
    EXPECT_EQ(j.at("stream_id_stride"), 1000000);
    EXPECT_EQ(j.at("config").at("forest").at("n_trees"), 5);
    EXPECT_EQ(j.at("class_names").at("2"), "2");
}

}  // namespace
