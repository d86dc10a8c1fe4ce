#ifndef BCOPS_NOISE_HPP_
#define BCOPS_NOISE_HPP_
#pragma once

#include "bcops/dataset.hpp"
#include "bcops/error.hpp"
#include "bcops/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bcops {

/// Uniform label noise: each label is replaced with probability `phi`.
struct corruption_spec {
    double phi{ 0.0 };
    std::uint32_t class_count{ 2 };
    /// Draw the replacement from all K classes (it may equal the original) instead of the K-1 others.
    bool inclusive_resampling{ false };

    void validate() const {
        if (!(phi >= 0.0 && phi <= 1.0)) {
            throw error{ "corruption spec: phi " + std::to_string(phi) + " outside [0, 1]" };
        }
        if (class_count < 2) {
            throw error{ "corruption spec: class_count must be at least 2" };
        }
    }
};

/// Per-row outcome of the corruption draw, for callers that need to audit it.
struct corruption_trace {
    std::vector<class_label> labels;
    std::vector<bool> corrupted;
};

/**
 * Applies the corruption function and records which rows took the replacement branch.
 *
 * Each row consumes one Bernoulli(phi) draw and, when it fires, one uniform
 * class draw, in row order.
 */
[[nodiscard]] inline corruption_trace corrupt_labels_traced(std::span<const class_label> labels, const corruption_spec &spec, const rng_stream &rng) {
    spec.validate();
    const std::uint32_t k = spec.class_count;
    for (const class_label l : labels) {
        if (l.id < 1 || l.id > k) {
            throw error{ "corrupt_labels: label " + std::to_string(l.id) + " outside 1.." + std::to_string(k) };
        }
    }

    auto engine = rng.engine();
    std::bernoulli_distribution fire{ spec.phi };
    std::uniform_int_distribution<std::uint32_t> any_class{ 1, k };
    std::uniform_int_distribution<std::uint32_t> other_class{ 1, k - 1 };

    corruption_trace out;
    out.labels.reserve(labels.size());
    out.corrupted.reserve(labels.size());
    for (const class_label l : labels) {
        if (!fire(engine)) {
            out.labels.push_back(l);
            out.corrupted.push_back(false);
            continue;
        }
        std::uint32_t replacement = 0;
        if (spec.inclusive_resampling) {
            replacement = any_class(engine);
        } else {
            // 1..K-1 skipping the current label
            replacement = other_class(engine);
            if (replacement >= l.id) {
                ++replacement;
            }
        }
        out.labels.push_back(class_label{ replacement });
        out.corrupted.push_back(true);
    }
    return out;
}

[[nodiscard]] inline std::vector<class_label> corrupt_labels(std::span<const class_label> labels, const corruption_spec &spec, const rng_stream &rng) {
    return corrupt_labels_traced(labels, spec, rng).labels;
}

/// Expected fraction of labels that end up different from the original.
[[nodiscard]] inline double expected_noise_fraction(const corruption_spec &spec) {
    spec.validate();
    if (spec.inclusive_resampling) {
        const auto k = static_cast<double>(spec.class_count);
        return spec.phi * (k - 1.0) / k;
    }
    return spec.phi;
}

}  // namespace bcops

#endif  // BCOPS_NOISE_HPP_
