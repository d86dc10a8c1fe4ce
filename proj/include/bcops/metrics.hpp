#ifndef BCOPS_METRICS_HPP_
#define BCOPS_METRICS_HPP_
#pragma once

#include "bcops/conformal.hpp"
#include "bcops/dataset.hpp"
#include "bcops/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace bcops {

/// Prediction sets paired with their evaluation-only ground truth.
class evaluation_frame {
  public:
    evaluation_frame(std::vector<prediction_set> sets, std::vector<truth> truths) :
        sets_{ std::move(sets) }, truths_{ std::move(truths) } {
        if (sets_.size() != truths_.size()) {
            throw error{ "evaluation_frame: " + std::to_string(sets_.size()) + " sets for " + std::to_string(truths_.size()) + " truths" };
        }
        if (sets_.empty()) {
            throw error{ "evaluation_frame: empty frame" };
        }
    }

    [[nodiscard]] const std::vector<prediction_set> &sets() const noexcept { return sets_; }
    [[nodiscard]] const std::vector<truth> &truths() const noexcept { return truths_; }
    [[nodiscard]] std::size_t size() const noexcept { return sets_.size(); }

    /// Inlier classes present in the truth column, ascending.
    [[nodiscard]] std::vector<class_label> classes() const {
        std::set<class_label> seen;
        for (const truth &t : truths_) {
            if (const auto *k = std::get_if<class_label>(&t)) {
                seen.insert(*k);
            }
        }
        return { seen.begin(), seen.end() };
    }

  private:
    std::vector<prediction_set> sets_;
    std::vector<truth> truths_;
};

enum class metric_kind {
    abstention_rate,
    class_coverage,
    mean_coverage,
};

[[nodiscard]] constexpr std::string_view metric_name(metric_kind m) noexcept {
    switch (m) {
        case metric_kind::abstention_rate:
            return "abstention_rate";
        case metric_kind::class_coverage:
            return "class_coverage";
        case metric_kind::mean_coverage:
            return "mean_coverage";
    }
    return "";
}

[[nodiscard]] inline metric_kind parse_metric(std::string_view name) {
    for (const metric_kind m : { metric_kind::abstention_rate, metric_kind::class_coverage, metric_kind::mean_coverage }) {
        if (metric_name(m) == name) {
            return m;
        }
    }
    throw error{ "unknown metric '" + std::string{ name } + "' (expected abstention_rate, class_coverage or mean_coverage)" };
}

struct metric_record {
    metric_kind metric{ metric_kind::mean_coverage };
    /// Set only for class_coverage.
    std::optional<class_label> k{};
    double value{ 0.0 };

    friend bool operator==(const metric_record &, const metric_record &) = default;
};

/// Fraction of class-k rows whose set contains k.
[[nodiscard]] inline double class_coverage(const evaluation_frame &frame, class_label k) {
    std::size_t n_k = 0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const auto *label = std::get_if<class_label>(&frame.truths()[i]);
        if (label == nullptr || *label != k) {
            continue;
        }
        ++n_k;
        covered += frame.sets()[i].contains(k) ? 1 : 0;
    }
    if (n_k == 0) {
        throw error{ "class absent from evaluation" };
    }
    return static_cast<double>(covered) / static_cast<double>(n_k);
}

/// Unweighted mean of class_coverage over the inlier classes in the frame.
[[nodiscard]] inline double mean_coverage(const evaluation_frame &frame) {
    const auto classes = frame.classes();
    if (classes.empty()) {
        throw error{ "mean_coverage: no inlier rows in frame" };
    }
    double sum = 0.0;
    for (const class_label k : classes) {
        sum += class_coverage(frame, k);
    }
    return sum / static_cast<double>(classes.size());
}

/// Fraction of outlier rows with an empty set.
[[nodiscard]] inline double abstention_rate(const evaluation_frame &frame) {
    std::size_t n_a = 0;
    std::size_t abstained = 0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        if (!is_outlier(frame.truths()[i])) {
            continue;
        }
        ++n_a;
        abstained += frame.sets()[i].empty() ? 1 : 0;
    }
    if (n_a == 0) {
        throw error{ "no outliers in frame" };
    }
    return static_cast<double>(abstained) / static_cast<double>(n_a);
}

/// Every metric the frame supports: per-class coverage, mean coverage, and abstention when outliers exist.
[[nodiscard]] inline std::vector<metric_record> evaluate(const evaluation_frame &frame) {
    std::vector<metric_record> out;
    const auto classes = frame.classes();
    for (const class_label k : classes) {
        out.push_back({ metric_kind::class_coverage, k, class_coverage(frame, k) });
    }
    if (!classes.empty()) {
        out.push_back({ metric_kind::mean_coverage, std::nullopt, mean_coverage(frame) });
    }
    const bool has_outliers = std::any_of(frame.truths().begin(), frame.truths().end(), [](const truth &t) { return is_outlier(t); });
    if (has_outliers) {
        out.push_back({ metric_kind::abstention_rate, std::nullopt, abstention_rate(frame) });
    }
    return out;
}

struct repetition_record {
    std::size_t repetition{ 0 };
    double phi{ 0.0 };
    metric_record record;
};

struct summary_row {
    double phi{ 0.0 };
    metric_kind metric{ metric_kind::mean_coverage };
    std::optional<class_label> k{};
    double mean{ 0.0 };
    /// Sample standard deviation; reported as 0 when n_reps is 1.
    double sd{ 0.0 };
    std::size_t n_reps{ 0 };

    /// True when sd is the n_reps == 1 placeholder rather than an estimate.
    [[nodiscard]] bool sd_undefined() const noexcept { return n_reps < 2; }
};

/// Mean and sample sd per (phi, metric, class), ordered by phi, metric name, then class.
[[nodiscard]] inline std::vector<summary_row> aggregate(const std::vector<repetition_record> &records) {
    using key = std::tuple<double, std::string_view, std::uint32_t>;
    std::map<key, std::pair<summary_row, std::vector<double>>> groups;
    for (const auto &r : records) {
        const key group{ r.phi, metric_name(r.record.metric), r.record.k ? r.record.k->id : 0U };
        auto &[row, values] = groups[group];
        row.phi = r.phi;
        row.metric = r.record.metric;
        row.k = r.record.k;
        values.push_back(r.record.value);
    }

    std::vector<summary_row> out;
    out.reserve(groups.size());
    for (auto &[group, entry] : groups) {
        auto &[row, values] = entry;
        const auto n = static_cast<double>(values.size());
        double sum = 0.0;
        for (const double v : values) {
            sum += v;
        }
        row.mean = sum / n;
        row.n_reps = values.size();
        if (values.size() > 1) {
            double ss = 0.0;
            for (const double v : values) {
                ss += (v - row.mean) * (v - row.mean);
            }
            row.sd = std::sqrt(ss / (n - 1.0));
        }
        out.push_back(row);
    }
    return out;
}

}  // namespace bcops

#endif  // BCOPS_METRICS_HPP_
