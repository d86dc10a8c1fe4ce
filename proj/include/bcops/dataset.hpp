#ifndef BCOPS_DATASET_HPP_
#define BCOPS_DATASET_HPP_
#pragma once

#include "bcops/error.hpp"
#include "bcops/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bcops {

using index_list = std::vector<std::size_t>;

/// Canonical class identifier in 1..K.
struct class_label {
    std::uint32_t id{ 0 };

    friend constexpr auto operator<=>(const class_label &, const class_label &) noexcept = default;
};

/// Ground-truth marker for a test row whose class never appears in training.
struct outlier_mark {
    friend constexpr bool operator==(const outlier_mark &, const outlier_mark &) noexcept = default;
};

/// Evaluation-only ground truth of a test row.
using truth = std::variant<class_label, outlier_mark>;

[[nodiscard]] inline bool is_outlier(const truth &t) noexcept { return std::holds_alternative<outlier_mark>(t); }

/// Dense row-major matrix of reals.
class matrix {
  public:
    matrix() = default;
    matrix(std::size_t rows, std::size_t cols) :
        rows_{ rows }, cols_{ cols }, data_(rows * cols, 0.0) {}
    matrix(std::size_t rows, std::size_t cols, std::vector<double> data) :
        rows_{ rows }, cols_{ cols }, data_{ std::move(data) } {
        if (data_.size() != rows_ * cols_) {
            throw error{ "matrix: data size " + std::to_string(data_.size()) + " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_) };
        }
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    [[nodiscard]] double &operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept { return { data_.data() + r * cols_, cols_ }; }
    [[nodiscard]] std::span<double> row(std::size_t r) noexcept { return { data_.data() + r * cols_, cols_ }; }

    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    /// Copy of the given rows, in the given order.
    [[nodiscard]] matrix select_rows(std::span<const std::size_t> rows) const {
        matrix out{ rows.size(), cols_ };
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto src = row(rows[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    friend bool operator==(const matrix &, const matrix &) = default;

  private:
    std::size_t rows_{ 0 };
    std::size_t cols_{ 0 };
    std::vector<double> data_;
};

/// Feature matrix with one canonical label per row.
class labeled_dataset {
  public:
    labeled_dataset() = default;

    labeled_dataset(matrix features, std::vector<class_label> labels, std::uint32_t class_count) :
        features_{ std::move(features) }, labels_{ std::move(labels) }, class_count_{ class_count } {
        if (labels_.size() != features_.rows()) {
            throw error{ "labeled_dataset: " + std::to_string(labels_.size()) + " labels for " + std::to_string(features_.rows()) + " feature rows" };
        }
        if (!features_.all_finite()) {
            throw error{ "labeled_dataset: features contain NaN or infinite values" };
        }
        for (const class_label l : labels_) {
            if (l.id < 1 || l.id > class_count_) {
                throw error{ "labeled_dataset: label " + std::to_string(l.id) + " outside 1.." + std::to_string(class_count_) };
            }
        }
    }

    [[nodiscard]] const matrix &features() const noexcept { return features_; }
    [[nodiscard]] const std::vector<class_label> &labels() const noexcept { return labels_; }
    [[nodiscard]] std::uint32_t class_count() const noexcept { return class_count_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t feature_count() const noexcept { return features_.cols(); }

    /// Row indices carrying label `k`, ascending.
    [[nodiscard]] index_list rows_of(class_label k) const {
        index_list out;
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] == k) {
                out.push_back(i);
            }
        }
        return out;
    }

    [[nodiscard]] labeled_dataset subset(std::span<const std::size_t> rows) const {
        std::vector<class_label> labels;
        labels.reserve(rows.size());
        for (const std::size_t r : rows) {
            labels.push_back(labels_[r]);
        }
        return { features_.select_rows(rows), std::move(labels), class_count_ };
    }

    /// Same features with a replacement label vector.
    [[nodiscard]] labeled_dataset with_labels(std::vector<class_label> labels) const {
        return { features_, std::move(labels), class_count_ };
    }

  private:
    matrix features_;
    std::vector<class_label> labels_;
    std::uint32_t class_count_{ 0 };
};

/// Test features; ground truth rides along for evaluation and is never read by fitting code.
class unlabeled_dataset {
  public:
    unlabeled_dataset() = default;

    explicit unlabeled_dataset(matrix features, std::optional<std::vector<truth>> ground_truth = std::nullopt) :
        features_{ std::move(features) }, ground_truth_{ std::move(ground_truth) } {
        if (ground_truth_ && ground_truth_->size() != features_.rows()) {
            throw error{ "unlabeled_dataset: ground truth length " + std::to_string(ground_truth_->size()) + " does not match " + std::to_string(features_.rows()) + " rows" };
        }
        if (!features_.all_finite()) {
            throw error{ "unlabeled_dataset: features contain NaN or infinite values" };
        }
    }

    [[nodiscard]] const matrix &features() const noexcept { return features_; }
    [[nodiscard]] const std::optional<std::vector<truth>> &ground_truth() const noexcept { return ground_truth_; }
    [[nodiscard]] std::size_t size() const noexcept { return features_.rows(); }
    [[nodiscard]] std::size_t feature_count() const noexcept { return features_.cols(); }

  private:
    matrix features_;
    std::optional<std::vector<truth>> ground_truth_;
};

/**
 * Uniformly random partition of `rows` into two halves.
 *
 * The first half receives ceil(n/2) rows, the second floor(n/2); both are
 * returned in ascending order.
 */
[[nodiscard]] inline std::pair<index_list, index_list> split_in_two(std::span<const std::size_t> rows, const rng_stream &rng) {
    if (rows.empty()) {
        throw error{ "empty split" };
    }
    index_list shuffled(rows.begin(), rows.end());
    auto engine = rng.engine();
    std::shuffle(shuffled.begin(), shuffled.end(), engine);

    const std::size_t first_size = (shuffled.size() + 1) / 2;
    index_list first(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(first_size));
    index_list second(shuffled.begin() + static_cast<std::ptrdiff_t>(first_size), shuffled.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return { std::move(first), std::move(second) };
}

/// Exactly `per_class` rows of every class, drawn without replacement; original row order is kept.
[[nodiscard]] inline labeled_dataset stratified_subsample(const labeled_dataset &data, std::size_t per_class, const rng_stream &rng) {
    index_list keep;
    keep.reserve(per_class * data.class_count());
    for (std::uint32_t k = 1; k <= data.class_count(); ++k) {
        index_list rows = data.rows_of(class_label{ k });
        if (rows.size() < per_class) {
            throw error{ "stratified_subsample: class " + std::to_string(k) + " has " + std::to_string(rows.size()) + " rows, " + std::to_string(per_class) + " requested" };
        }
        auto engine = rng.derive(k).engine();
        std::shuffle(rows.begin(), rows.end(), engine);
        keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(per_class));
    }
    std::sort(keep.begin(), keep.end());
    return data.subset(keep);
}

/// Dense 1..K relabeling of an arbitrary ordered token alphabet.
template <typename Token>
struct canonical_labels {
    std::vector<class_label> labels;
    /// Sorted raw token -> canonical label.
    std::map<Token, class_label> mapping;
};

/// Maps the sorted distinct tokens onto 1..K in order.
template <typename Token>
[[nodiscard]] canonical_labels<Token> relabel_to_canonical(std::span<const Token> raw) {
    canonical_labels<Token> out;
    for (const Token &t : raw) {
        out.mapping.emplace(t, class_label{});
    }
    std::uint32_t next = 1;
    for (auto &[token, label] : out.mapping) {
        label = class_label{ next++ };
    }
    out.labels.reserve(raw.size());
    for (const Token &t : raw) {
        out.labels.push_back(out.mapping.at(t));
    }
    return out;
}

template <typename Token>
[[nodiscard]] canonical_labels<Token> relabel_to_canonical(const std::vector<Token> &raw) {
    return relabel_to_canonical(std::span<const Token>{ raw });
}

}  // namespace bcops

#endif  // BCOPS_DATASET_HPP_
