#ifndef BCOPS_FOREST_HPP_
#define BCOPS_FOREST_HPP_
#pragma once

#include "bcops/dataset.hpp"
#include "bcops/error.hpp"
#include "bcops/parallel.hpp"
#include "bcops/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bcops {

/// Features with 0/1 targets: the input of one auxiliary binary learner.
struct binary_training_set {
    matrix features;
    std::vector<std::uint8_t> targets;

    /// Throws unless shapes agree, targets are 0/1 and both values occur.
    void validate() const {
        if (targets.size() != features.rows()) {
            throw error{ "binary training set: " + std::to_string(targets.size()) + " targets for " + std::to_string(features.rows()) + " rows" };
        }
        if (features.cols() == 0) {
            throw error{ "binary training set: no features" };
        }
        bool has_zero = false;
        bool has_one = false;
        for (const std::uint8_t t : targets) {
            if (t > 1) {
                throw error{ "binary training set: target " + std::to_string(t) + " is not 0 or 1" };
            }
            (t == 0 ? has_zero : has_one) = true;
        }
        if (!has_zero || !has_one) {
            throw error{ "degenerate binary training set" };
        }
        if (!features.all_finite()) {
            throw error{ "binary training set: features contain NaN or infinite values" };
        }
    }
};

struct forest_config {
    std::size_t n_trees{ 100 };
    /// Features tried per split; unset means floor(sqrt(p)), at least 1.
    std::optional<std::size_t> mtry{};
    /// Nodes holding this many rows or fewer become leaves.
    std::size_t min_node_size{ 5 };
    std::optional<std::size_t> max_depth{};
    rng_stream seed_stream{};

    [[nodiscard]] std::size_t resolved_mtry(std::size_t feature_count) const {
        if (mtry) {
            return *mtry;
        }
        const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(feature_count))));
        return std::max<std::size_t>(1, root);
    }

    void validate(std::size_t feature_count) const {
        if (n_trees < 1) {
            throw error{ "forest config: n_trees must be at least 1" };
        }
        const std::size_t m = resolved_mtry(feature_count);
        if (m < 1 || m > feature_count) {
            throw error{ "forest config: mtry " + std::to_string(m) + " outside 1.." + std::to_string(feature_count) };
        }
        if (min_node_size < 1) {
            throw error{ "forest config: min_node_size must be at least 1" };
        }
    }
};

/// Gini impurity of a node holding `n0` zeros and `n1` ones.
[[nodiscard]] inline double gini_impurity(std::size_t n0, std::size_t n1) {
    const std::size_t n = n0 + n1;
    if (n == 0) {
        throw error{ "gini impurity of an empty node" };
    }
    const double q = static_cast<double>(n1) / static_cast<double>(n);
    return 1.0 - q * q - (1.0 - q) * (1.0 - q);
}

struct split_candidate {
    double threshold{ 0.0 };
    double impurity_decrease{ 0.0 };
};

namespace detail {

struct value_target {
    double value;
    std::uint8_t target;
};

// Sorts `pairs` in place and scans midpoints between distinct neighbours. Ties keep the lowest threshold.
inline std::optional<split_candidate> scan_sorted_split(std::vector<value_target> &pairs) {
    const std::size_t n = pairs.size();
    if (n < 2) {
        return std::nullopt;
    }
    std::sort(pairs.begin(), pairs.end(), [](const value_target &a, const value_target &b) { return a.value < b.value; });
    if (pairs.front().value == pairs.back().value) {
        return std::nullopt;
    }

    std::size_t total_ones = 0;
    for (const auto &p : pairs) {
        total_ones += p.target;
    }
    const auto nd = static_cast<double>(n);
    const double parent_ones = static_cast<double>(total_ones);
    // weighted child impurity * n = n_l - ones_l^2/n_l - zeros_l^2/n_l + (same for right); only the ratio terms vary
    const auto sum_sq_ratio = [](double ones, double count) {
        const double zeros = count - ones;
        return (ones * ones + zeros * zeros) / count;
    };
    const double parent_term = sum_sq_ratio(parent_ones, nd);

    std::optional<split_candidate> best;
    double best_term = parent_term;
    std::size_t left_ones = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        left_ones += pairs[i].target;
        const double lo = pairs[i].value;
        const double hi = pairs[i + 1].value;
        if (!(lo < hi)) {
            continue;
        }
        const auto nl = static_cast<double>(i + 1);
        const auto ol = static_cast<double>(left_ones);
        const double term = sum_sq_ratio(ol, nl) + sum_sq_ratio(parent_ones - ol, nd - nl);
        if (!best || term > best_term) {
            double threshold = lo + (hi - lo) / 2.0;
            if (!(threshold < hi)) {
                threshold = lo;
            }
            best_term = term;
            best = split_candidate{ threshold, (term - parent_term) / nd };
        }
    }
    return best;
}

}  // namespace detail

/**
 * Best Gini split of `feature` over `rows` (duplicates allowed).
 *
 * Candidate thresholds are the midpoints between consecutive distinct sorted
 * values; rows with value <= threshold go left. Returns nothing when the
 * feature is constant on `rows`.
 */
[[nodiscard]] inline std::optional<split_candidate> best_split(std::span<const std::size_t> rows, std::size_t feature, const binary_training_set &data) {
    if (rows.empty()) {
        throw error{ "best_split: no rows" };
    }
    std::vector<detail::value_target> pairs;
    pairs.reserve(rows.size());
    for (const std::size_t r : rows) {
        pairs.push_back({ data.features(r, feature), data.targets[r] });
    }
    return detail::scan_sorted_split(pairs);
}

/// One CART tree stored as a flat node array; node 0 is the root.
class decision_tree {
  public:
    struct node {
        std::uint32_t feature{ 0 };
        double threshold{ 0.0 };
        /// Child indices; -1 marks a leaf.
        std::int32_t left{ -1 };
        std::int32_t right{ -1 };
        /// Fraction of target-1 training rows that reached this node.
        double probability{ 0.0 };

        [[nodiscard]] bool is_leaf() const noexcept { return left < 0; }
        friend bool operator==(const node &, const node &) = default;
    };

    decision_tree() = default;
    explicit decision_tree(std::vector<node> nodes) :
        nodes_{ std::move(nodes) } {}

    [[nodiscard]] const std::vector<node> &nodes() const noexcept { return nodes_; }

    [[nodiscard]] const node &leaf_for(std::span<const double> x) const noexcept {
        const node *n = &nodes_.front();
        while (!n->is_leaf()) {
            n = &nodes_[static_cast<std::size_t>(x[n->feature] <= n->threshold ? n->left : n->right)];
        }
        return *n;
    }

    [[nodiscard]] double predict(std::span<const double> x) const noexcept { return leaf_for(x).probability; }

    friend bool operator==(const decision_tree &, const decision_tree &) = default;

  private:
    std::vector<node> nodes_;
};

class forest_model {
  public:
    forest_model() = default;
    forest_model(std::vector<decision_tree> trees, std::size_t feature_count) :
        trees_{ std::move(trees) }, feature_count_{ feature_count } {
        if (trees_.empty()) {
            throw error{ "forest_model: no trees" };
        }
    }

    [[nodiscard]] const std::vector<decision_tree> &trees() const noexcept { return trees_; }
    [[nodiscard]] std::size_t feature_count() const noexcept { return feature_count_; }

    friend bool operator==(const forest_model &, const forest_model &) = default;

  private:
    std::vector<decision_tree> trees_;
    std::size_t feature_count_{ 0 };
};

namespace detail {

inline decision_tree grow_tree(const binary_training_set &data, const forest_config &config, std::size_t mtry, std::mt19937_64 &engine) {
    using node = decision_tree::node;
    const std::size_t n = data.targets.size();
    const std::size_t p = data.features.cols();

    std::vector<std::size_t> sample(n);
    std::uniform_int_distribution<std::size_t> pick_row{ 0, n - 1 };
    for (std::size_t &s : sample) {
        s = pick_row(engine);
    }

    struct pending {
        std::size_t node_index;
        std::size_t begin;
        std::size_t end;
        std::size_t depth;
    };

    std::vector<node> nodes(1);
    std::vector<pending> stack{ { 0, 0, n, 0 } };
    std::vector<std::size_t> features(p);
    std::vector<value_target> pairs;
    pairs.reserve(n);

    while (!stack.empty()) {
        const pending cur = stack.back();
        stack.pop_back();
        const std::size_t count = cur.end - cur.begin;
        std::size_t ones = 0;
        for (std::size_t i = cur.begin; i < cur.end; ++i) {
            ones += data.targets[sample[i]];
        }
        nodes[cur.node_index].probability = static_cast<double>(ones) / static_cast<double>(count);

        const bool pure = ones == 0 || ones == count;
        const bool depth_reached = config.max_depth && cur.depth >= *config.max_depth;
        if (pure || depth_reached || count <= config.min_node_size) {
            continue;
        }

        std::iota(features.begin(), features.end(), std::size_t{ 0 });
        for (std::size_t i = 0; i < mtry; ++i) {
            std::uniform_int_distribution<std::size_t> pick{ i, p - 1 };
            std::swap(features[i], features[pick(engine)]);
        }
        std::sort(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(mtry));

        std::optional<split_candidate> best;
        std::uint32_t best_feature = 0;
        for (std::size_t f = 0; f < mtry; ++f) {
            const std::size_t feature = features[f];
            pairs.clear();
            for (std::size_t i = cur.begin; i < cur.end; ++i) {
                pairs.push_back({ data.features(sample[i], feature), data.targets[sample[i]] });
            }
            const auto candidate = scan_sorted_split(pairs);
            if (candidate && (!best || candidate->impurity_decrease > best->impurity_decrease)) {
                best = candidate;
                best_feature = static_cast<std::uint32_t>(feature);
            }
        }
        if (!best || !(best->impurity_decrease > 1e-12)) {
            continue;
        }

        const auto first = sample.begin() + static_cast<std::ptrdiff_t>(cur.begin);
        const auto last = sample.begin() + static_cast<std::ptrdiff_t>(cur.end);
        const auto mid = std::partition(first, last, [&](std::size_t r) { return data.features(r, best_feature) <= best->threshold; });
        const auto split_at = static_cast<std::size_t>(mid - sample.begin());

        const auto left_index = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        nodes.emplace_back();
        node &parent = nodes[cur.node_index];
        parent.feature = best_feature;
        parent.threshold = best->threshold;
        parent.left = left_index;
        parent.right = left_index + 1;
        stack.push_back({ static_cast<std::size_t>(left_index + 1), split_at, cur.end, cur.depth + 1 });
        stack.push_back({ static_cast<std::size_t>(left_index), cur.begin, split_at, cur.depth + 1 });
    }
    return decision_tree{ std::move(nodes) };
}

}  // namespace detail

/**
 * Grows `config.n_trees` CART trees, each on its own bootstrap resample.
 *
 * Tree t draws from `config.seed_stream.derive(t)`, so the forest does not
 * depend on `threads`.
 */
[[nodiscard]] inline forest_model train_forest(const binary_training_set &data, const forest_config &config, std::size_t threads = 1) {
    data.validate();
    config.validate(data.features.cols());
    const std::size_t mtry = config.resolved_mtry(data.features.cols());

    std::vector<decision_tree> trees(config.n_trees);
    parallel_for(config.n_trees, threads, [&](std::size_t t) {
        auto engine = config.seed_stream.derive(t).engine();
        trees[t] = detail::grow_tree(data, config, mtry, engine);
    });
    return { std::move(trees), data.features.cols() };
}

/// Mean leaf probability across trees.
[[nodiscard]] inline double predict_probability(const forest_model &model, std::span<const double> x) {
    if (x.size() != model.feature_count()) {
        throw error{ "predict_probability: expected " + std::to_string(model.feature_count()) + " features, got " + std::to_string(x.size()) };
    }
    double sum = 0.0;
    for (const decision_tree &tree : model.trees()) {
        sum += tree.predict(x);
    }
    return sum / static_cast<double>(model.trees().size());
}

/// predict_probability for the listed rows of `features`.
[[nodiscard]] inline std::vector<double> predict_rows(const forest_model &model, const matrix &features, std::span<const std::size_t> rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const std::size_t r : rows) {
        out.push_back(predict_probability(model, features.row(r)));
    }
    return out;
}

}  // namespace bcops

#endif  // BCOPS_FOREST_HPP_
