#ifndef BCOPS_CONFORMAL_HPP_
#define BCOPS_CONFORMAL_HPP_
#pragma once

#include "bcops/dataset.hpp"
#include "bcops/error.hpp"
#include "bcops/forest.hpp"
#include "bcops/parallel.hpp"
#include "bcops/rng.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bcops {

/// Subset of {1..K} assigned to one test point; empty means abstention.
class prediction_set {
  public:
    prediction_set() = default;
    explicit prediction_set(std::vector<class_label> members) :
        members_{ std::move(members) } {
        std::sort(members_.begin(), members_.end());
        members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    }

    [[nodiscard]] bool contains(class_label k) const noexcept { return std::binary_search(members_.begin(), members_.end(), k); }
    [[nodiscard]] bool empty() const noexcept { return members_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] const std::vector<class_label> &members() const noexcept { return members_; }

    [[nodiscard]] bool is_subset_of(const prediction_set &other) const {
        return std::includes(other.members_.begin(), other.members_.end(), members_.begin(), members_.end());
    }

    friend bool operator==(const prediction_set &, const prediction_set &) = default;

  private:
    std::vector<class_label> members_;
};

/// (1 + #{c <= score}) / (n + 1) against ascending `calibration`; 1 when it is empty.
[[nodiscard]] inline double conformal_p_value(double score, std::span<const double> calibration) {
    const auto at_or_below = static_cast<std::size_t>(std::upper_bound(calibration.begin(), calibration.end(), score) - calibration.begin());
    return static_cast<double>(1 + at_or_below) / static_cast<double>(calibration.size() + 1);
}

/// Non-fatal condition met while fitting, e.g. a class missing from one training fold.
struct fit_warning {
    class_label k;
    int fold{ 0 };
    std::string message;

    friend bool operator==(const fit_warning &, const fit_warning &) = default;
};

struct bcops_options {
    /// Cap on test-fold rows per class-fold row in each binary training set; unset disables subsampling.
    std::optional<double> balance_cap{ 5.0 };
    /// Workers for the 2K forests; 0 means hardware concurrency.
    std::size_t threads{ 1 };
};

/**
 * A fitted BCOPS model bound to the test set it was fitted with.
 *
 * For class k and fold f, classifier(k, f) separates class-k rows of training
 * fold f from test fold f. It scores test fold 3-f and the class-k rows of
 * training fold 3-f, the latter forming calibration(k, f).
 */
class bcops_model {
  public:
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] std::uint32_t class_count() const noexcept { return class_count_; }
    [[nodiscard]] std::size_t test_size() const noexcept { return scoring_fold_.size(); }

    [[nodiscard]] const forest_model &classifier(class_label k, int fold) const { return classifiers_.at(slot(k, fold)); }
    [[nodiscard]] std::span<const double> calibration(class_label k, int fold) const { return calibration_.at(slot(k, fold)); }

    /// Fold (1 or 2) of the models that score test row `row`.
    [[nodiscard]] int scoring_fold(std::size_t row) const { return scoring_fold_.at(row); }

    [[nodiscard]] double score(std::size_t row, class_label k) const {
        check_row(row);
        return test_scores_[row * class_count_ + (k.id - 1)];
    }

    [[nodiscard]] double p_value(std::size_t row, class_label k) const {
        return conformal_p_value(score(row, k), calibration(k, scoring_fold(row)));
    }

    [[nodiscard]] const std::vector<fit_warning> &warnings() const noexcept { return warnings_; }

    /// Copy whose class-k, fold-f scores (calibration and the test rows that fold scores) pass through `transform`.
    [[nodiscard]] bcops_model map_scores(class_label k, int fold, const std::function<double(double)> &transform) const {
        bcops_model out = *this;
        auto &cal = out.calibration_.at(slot(k, fold));
        for (double &c : cal) {
            c = transform(c);
        }
        std::sort(cal.begin(), cal.end());
        for (std::size_t row = 0; row < out.scoring_fold_.size(); ++row) {
            if (out.scoring_fold_[row] == fold) {
                double &s = out.test_scores_[row * class_count_ + (k.id - 1)];
                s = transform(s);
            }
        }
        return out;
    }

  private:
    friend bcops_model fit_bcops(const labeled_dataset &, const unlabeled_dataset &, const forest_config &, double, const rng_stream &, const bcops_options &);

    [[nodiscard]] std::size_t slot(class_label k, int fold) const {
        if (k.id < 1 || k.id > class_count_ || (fold != 1 && fold != 2)) {
            throw error{ "bcops_model: no model for class " + std::to_string(k.id) + ", fold " + std::to_string(fold) };
        }
        return (k.id - 1) * 2 + static_cast<std::size_t>(fold - 1);
    }

    void check_row(std::size_t row) const {
        if (row >= scoring_fold_.size()) {
            throw error{ "bcops_model: test row " + std::to_string(row) + " outside fitted test set of " + std::to_string(scoring_fold_.size()) + " rows" };
        }
    }

    double alpha_{ 0.05 };
    std::uint32_t class_count_{ 0 };
    std::vector<forest_model> classifiers_;
    std::vector<std::vector<double>> calibration_;
    std::vector<int> scoring_fold_;
    std::vector<double> test_scores_;
    std::vector<fit_warning> warnings_;
};

/**
 * Fits one binary forest per (class, fold) against the test mixture and
 * collects calibration scores from the opposite training fold.
 *
 * Training rows are split in two within each class; test rows are split in
 * two as a whole. Tree randomness comes from `rng`, so `forest.seed_stream` is
 * ignored here.
 */
[[nodiscard]] inline bcops_model fit_bcops(const labeled_dataset &train, const unlabeled_dataset &test, const forest_config &forest, double alpha, const rng_stream &rng, const bcops_options &options = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw error{ "fit_bcops: alpha " + std::to_string(alpha) + " outside (0, 1)" };
    }
    if (test.size() < 2) {
        throw error{ "fit_bcops: test set needs at least 2 rows, got " + std::to_string(test.size()) };
    }
    if (train.feature_count() != test.feature_count()) {
        throw error{ "fit_bcops: train has " + std::to_string(train.feature_count()) + " features, test has " + std::to_string(test.feature_count()) };
    }
    const std::uint32_t class_count = train.class_count();
    if (class_count < 1) {
        throw error{ "fit_bcops: no classes" };
    }

    bcops_model model;
    model.alpha_ = alpha;
    model.class_count_ = class_count;

    // folds[k-1][f-1]: class-k training rows of fold f
    std::vector<std::array<index_list, 2>> folds(class_count);
    for (std::uint32_t k = 1; k <= class_count; ++k) {
        const index_list rows = train.rows_of(class_label{ k });
        if (rows.empty()) {
            throw error{ "fit_bcops: class " + std::to_string(k) + " absent from the training set" };
        }
        auto [first, second] = split_in_two(rows, rng.derive(1000 + k));
        folds[k - 1] = { std::move(first), std::move(second) };
    }

    index_list all_test(test.size());
    for (std::size_t i = 0; i < all_test.size(); ++i) {
        all_test[i] = i;
    }
    const auto [test_first, test_second] = split_in_two(all_test, rng.derive(1));
    const std::array<const index_list *, 2> test_folds{ &test_first, &test_second };

    const std::size_t slots = static_cast<std::size_t>(class_count) * 2;
    model.classifiers_.resize(slots);
    model.calibration_.resize(slots);
    std::vector<std::vector<fit_warning>> slot_warnings(slots);

    parallel_for(slots, options.threads, [&](std::size_t s) {
        const auto k = static_cast<std::uint32_t>(s / 2 + 1);
        const std::size_t f = s % 2;
        const int fold = static_cast<int>(f) + 1;
        const index_list *positives = &folds[k - 1][f];
        const index_list &calibration_rows = folds[k - 1][1 - f];
        if (positives->empty()) {
            positives = &folds[k - 1][1 - f];
            slot_warnings[s].push_back({ class_label{ k }, fold, "class " + std::to_string(k) + " absent from training fold " + std::to_string(fold) + "; trained on the other fold's rows" });
        }
        if (calibration_rows.empty()) {
            slot_warnings[s].push_back({ class_label{ k }, fold, "class " + std::to_string(k) + " has no calibration rows for fold " + std::to_string(fold) + "; p-values fall back to 1" });
        }

        index_list negatives = *test_folds[f];
        if (options.balance_cap) {
            const auto cap = static_cast<std::size_t>(*options.balance_cap * static_cast<double>(positives->size()));
            if (negatives.size() > cap && cap > 0) {
                auto engine = rng.derive(2000 + s).engine();
                std::shuffle(negatives.begin(), negatives.end(), engine);
                negatives.resize(cap);
                std::sort(negatives.begin(), negatives.end());
            }
        }

        binary_training_set binary;
        binary.features = matrix{ positives->size() + negatives.size(), train.feature_count() };
        binary.targets.reserve(positives->size() + negatives.size());
        std::size_t out_row = 0;
        for (const std::size_t r : *positives) {
            const auto src = train.features().row(r);
            std::copy(src.begin(), src.end(), binary.features.row(out_row++).begin());
            binary.targets.push_back(1);
        }
        for (const std::size_t r : negatives) {
            const auto src = test.features().row(r);
            std::copy(src.begin(), src.end(), binary.features.row(out_row++).begin());
            binary.targets.push_back(0);
        }

        forest_config config = forest;
        config.seed_stream = rng.derive(3000 + s);
        model.classifiers_[s] = train_forest(binary, config);

        std::vector<double> cal = predict_rows(model.classifiers_[s], train.features(), calibration_rows);
        std::sort(cal.begin(), cal.end());
        model.calibration_[s] = std::move(cal);
    });

    for (auto &w : slot_warnings) {
        model.warnings_.insert(model.warnings_.end(), w.begin(), w.end());
    }

    model.scoring_fold_.assign(test.size(), 0);
    model.test_scores_.assign(test.size() * class_count, 0.0);
    for (std::size_t f = 0; f < 2; ++f) {
        // the fold-f models score test fold 3-f
        for (const std::size_t row : *test_folds[1 - f]) {
            model.scoring_fold_[row] = static_cast<int>(f) + 1;
        }
    }
    parallel_for(test.size(), options.threads, [&](std::size_t row) {
        const int fold = model.scoring_fold_[row];
        const auto x = test.features().row(row);
        for (std::uint32_t k = 1; k <= class_count; ++k) {
            model.test_scores_[row * class_count + (k - 1)] = predict_probability(model.classifier(class_label{ k }, fold), x);
        }
    });
    return model;
}

/// {k : p_k(x) > alpha}, using the model's own alpha unless one is given.
[[nodiscard]] inline prediction_set predict_set(const bcops_model &model, std::size_t test_row, std::optional<double> alpha = std::nullopt) {
    if (test_row >= model.test_size()) {
        throw error{ "predict_set: unknown test row " + std::to_string(test_row) };
    }
    const double level = alpha.value_or(model.alpha());
    std::vector<class_label> members;
    for (std::uint32_t k = 1; k <= model.class_count(); ++k) {
        if (model.p_value(test_row, class_label{ k }) > level) {
            members.push_back(class_label{ k });
        }
    }
    return prediction_set{ std::move(members) };
}

[[nodiscard]] inline std::vector<prediction_set> predict_all(const bcops_model &model, std::optional<double> alpha = std::nullopt) {
    std::vector<prediction_set> out;
    out.reserve(model.test_size());
    for (std::size_t row = 0; row < model.test_size(); ++row) {
        out.push_back(predict_set(model, row, alpha));
    }
    return out;
}

}  // namespace bcops

#endif  // BCOPS_CONFORMAL_HPP_
