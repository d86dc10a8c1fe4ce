#ifndef BCOPS_DATAGEN_HPP_
#define BCOPS_DATAGEN_HPP_
#pragma once

#include "bcops/dataset.hpp"
#include "bcops/error.hpp"
#include "bcops/rng.hpp"

#include <zlib.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bcops {

/// Independent normal coordinates; the second parameter is a standard deviation.
struct gaussian_spec {
    struct coordinate {
        double mean{ 0.0 };
        double sd{ 1.0 };
    };
    std::vector<coordinate> coordinates;

    [[nodiscard]] static gaussian_spec standard(std::size_t p) { return { std::vector<coordinate>(p) }; }

    [[nodiscard]] gaussian_spec with(std::size_t index, double mean, double sd) const {
        gaussian_spec out = *this;
        out.coordinates.at(index) = { mean, sd };
        return out;
    }

    void validate() const {
        for (const auto &c : coordinates) {
            if (!(c.sd > 0.0)) {
                throw error{ "gaussian_spec: scale must be positive" };
            }
        }
    }

    template <typename Engine>
    void sample(Engine &engine, std::span<double> out) const {
        for (std::size_t j = 0; j < coordinates.size(); ++j) {
            std::normal_distribution<double> dist{ coordinates[j].mean, coordinates[j].sd };
            out[j] = dist(engine);
        }
    }
};

namespace detail {

// Draws `count` rows per spec in block order.
template <typename Engine>
matrix sample_blocks(Engine &engine, const std::vector<std::pair<gaussian_spec, std::size_t>> &blocks, std::size_t p) {
    std::size_t total = 0;
    for (const auto &[spec, count] : blocks) {
        spec.validate();
        total += count;
    }
    matrix out{ total, p };
    std::size_t row = 0;
    for (const auto &[spec, count] : blocks) {
        for (std::size_t i = 0; i < count; ++i) {
            spec.sample(engine, out.row(row++));
        }
    }
    return out;
}

}  // namespace detail

inline constexpr std::size_t synthetic_dimension = 10;

/// Two-class synthetic family: class 1 has x1 ~ N(0, 1), class 2 has x1 ~ N(3, 0.5); other coordinates N(0, 1).
struct example1 {
    static constexpr std::size_t train_per_class = 500;
    static constexpr std::size_t test_per_group = 500;

    [[nodiscard]] static gaussian_spec class_spec(std::uint32_t k) {
        const auto base = gaussian_spec::standard(synthetic_dimension);
        return k == 1 ? base : base.with(0, 3.0, 0.5);
    }

    /// x2 ~ N(3, 1), everything else N(0, 1).
    [[nodiscard]] static gaussian_spec outlier_spec() { return gaussian_spec::standard(synthetic_dimension).with(1, 3.0, 1.0); }
};

/// Ten-class family: class y has x_y ~ N(3, 0.5), other coordinates N(0, 1); outliers have every x_i ~ N(3, 2).
struct example2 {
    static constexpr std::uint32_t class_count = 10;
    static constexpr std::size_t per_class = 500;
    static constexpr std::size_t outliers = 500;

    [[nodiscard]] static gaussian_spec class_spec(std::uint32_t k) {
        return gaussian_spec::standard(synthetic_dimension).with(k - 1, 3.0, 0.5);
    }

    [[nodiscard]] static gaussian_spec outlier_spec() {
        gaussian_spec s = gaussian_spec::standard(synthetic_dimension);
        for (auto &c : s.coordinates) {
            c = { 3.0, 2.0 };
        }
        return s;
    }
};

[[nodiscard]] inline labeled_dataset gen_example1_train(const rng_stream &rng) {
    auto engine = rng.engine();
    const std::size_t n = example1::train_per_class;
    matrix features = detail::sample_blocks(engine, { { example1::class_spec(1), n }, { example1::class_spec(2), n } }, synthetic_dimension);
    std::vector<class_label> labels(n, class_label{ 1 });
    labels.resize(2 * n, class_label{ 2 });
    return { std::move(features), std::move(labels), 2 };
}

[[nodiscard]] inline unlabeled_dataset gen_example1_test(const rng_stream &rng) {
    auto engine = rng.engine();
    const std::size_t n = example1::test_per_group;
    matrix features = detail::sample_blocks(engine, { { example1::class_spec(1), n }, { example1::class_spec(2), n }, { example1::outlier_spec(), n } }, synthetic_dimension);
    std::vector<truth> truths(n, class_label{ 1 });
    truths.resize(2 * n, class_label{ 2 });
    truths.resize(3 * n, outlier_mark{});
    return unlabeled_dataset{ std::move(features), std::move(truths) };
}

[[nodiscard]] inline std::pair<labeled_dataset, unlabeled_dataset> gen_example2(const rng_stream &rng) {
    auto train_engine = rng.derive(1).engine();
    auto test_engine = rng.derive(2).engine();

    std::vector<std::pair<gaussian_spec, std::size_t>> blocks;
    std::vector<class_label> labels;
    std::vector<truth> truths;
    for (std::uint32_t k = 1; k <= example2::class_count; ++k) {
        blocks.emplace_back(example2::class_spec(k), example2::per_class);
        labels.insert(labels.end(), example2::per_class, class_label{ k });
        truths.insert(truths.end(), example2::per_class, class_label{ k });
    }
    matrix train_features = detail::sample_blocks(train_engine, blocks, synthetic_dimension);
    blocks.emplace_back(example2::outlier_spec(), example2::outliers);
    truths.insert(truths.end(), example2::outliers, outlier_mark{});
    matrix test_features = detail::sample_blocks(test_engine, blocks, synthetic_dimension);

    return { labeled_dataset{ std::move(train_features), std::move(labels), example2::class_count },
             unlabeled_dataset{ std::move(test_features), std::move(truths) } };
}

// ---------------------------------------------------------------------------
// IDX container (MNIST)
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t idx_images_magic = 0x00000803;
inline constexpr std::uint32_t idx_labels_magic = 0x00000801;

/// Magic word plus big-endian dimension sizes.
struct idx_header {
    std::uint32_t magic{ 0 };
    std::vector<std::uint32_t> dims;

    [[nodiscard]] std::size_t byte_size() const noexcept { return 4 * (1 + dims.size()); }

    [[nodiscard]] std::vector<std::uint8_t> serialize() const {
        std::vector<std::uint8_t> out;
        out.reserve(byte_size());
        const auto put = [&out](std::uint32_t v) {
            for (int shift = 24; shift >= 0; shift -= 8) {
                out.push_back(static_cast<std::uint8_t>(v >> static_cast<unsigned>(shift)));
            }
        };
        put(magic);
        for (const std::uint32_t d : dims) {
            put(d);
        }
        return out;
    }

    friend bool operator==(const idx_header &, const idx_header &) = default;
};

namespace detail {

inline std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char *field) {
    if (offset + 4 > bytes.size()) {
        throw idx_parse_error{ std::string{ "truncated IDX header reading " } + field, offset };
    }
    return (std::uint32_t{ bytes[offset] } << 24U) | (std::uint32_t{ bytes[offset + 1] } << 16U) | (std::uint32_t{ bytes[offset + 2] } << 8U) | std::uint32_t{ bytes[offset + 3] };
}

inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> compressed) {
    z_stream stream{};
    if (inflateInit2(&stream, 16 + MAX_WBITS) != Z_OK) {
        throw idx_parse_error{ "cannot initialise gzip decoder", 0 };
    }
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1U << 16U> chunk{};
    stream.next_in = const_cast<Bytef *>(compressed.data());
    stream.avail_in = static_cast<uInt>(compressed.size());
    int status = Z_OK;
    do {
        stream.next_out = chunk.data();
        stream.avail_out = static_cast<uInt>(chunk.size());
        status = inflate(&stream, Z_NO_FLUSH);
        if (status != Z_OK && status != Z_STREAM_END) {
            const std::size_t at = stream.total_in;
            inflateEnd(&stream);
            throw idx_parse_error{ "corrupt gzip stream", at };
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - stream.avail_out));
        if (status != Z_STREAM_END && stream.avail_in == 0 && stream.avail_out != 0) {
            const std::size_t at = stream.total_in;
            inflateEnd(&stream);
            throw idx_parse_error{ "truncated gzip stream", at };
        }
    } while (status != Z_STREAM_END);
    inflateEnd(&stream);
    return out;
}

}  // namespace detail

/// File contents, transparently inflated when they start with the gzip magic 0x1f8b.
[[nodiscard]] inline std::vector<std::uint8_t> read_idx_bytes(const std::filesystem::path &path) {
    std::ifstream in{ path, std::ios::binary };
    if (!in) {
        throw error{ "cannot open " + path.string() };
    }
    std::vector<std::uint8_t> bytes{ std::istreambuf_iterator<char>{ in }, std::istreambuf_iterator<char>{} };
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
        return detail::gunzip(bytes);
    }
    return bytes;
}

struct idx_images {
    idx_header header;
    std::size_t count{ 0 };
    std::size_t rows{ 0 };
    std::size_t cols{ 0 };
    std::vector<std::uint8_t> pixels;
};

struct idx_labels {
    idx_header header;
    std::vector<std::uint8_t> labels;
};

[[nodiscard]] inline idx_images parse_idx_images(std::span<const std::uint8_t> bytes) {
    const std::uint32_t magic = detail::read_be32(bytes, 0, "magic");
    if (magic != idx_images_magic) {
        throw idx_parse_error{ "bad IDX image magic number", 0 };
    }
    idx_images out;
    out.count = detail::read_be32(bytes, 4, "image count");
    out.rows = detail::read_be32(bytes, 8, "row count");
    out.cols = detail::read_be32(bytes, 12, "column count");
    out.header = { magic, { static_cast<std::uint32_t>(out.count), static_cast<std::uint32_t>(out.rows), static_cast<std::uint32_t>(out.cols) } };
    const std::size_t expected = out.count * out.rows * out.cols;
    if (bytes.size() - 16 < expected) {
        throw idx_parse_error{ "truncated IDX image data: expected " + std::to_string(expected) + " pixel bytes", bytes.size() };
    }
    out.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(expected));
    return out;
}

[[nodiscard]] inline idx_labels parse_idx_labels(std::span<const std::uint8_t> bytes) {
    const std::uint32_t magic = detail::read_be32(bytes, 0, "magic");
    if (magic != idx_labels_magic) {
        throw idx_parse_error{ "bad IDX label magic number", 0 };
    }
    const std::size_t count = detail::read_be32(bytes, 4, "label count");
    if (bytes.size() - 8 < count) {
        throw idx_parse_error{ "truncated IDX label data: expected " + std::to_string(count) + " labels", bytes.size() };
    }
    idx_labels out;
    out.header = { magic, { static_cast<std::uint32_t>(count) } };
    out.labels.assign(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count));
    return out;
}

struct mnist_source {
    enum class role { train, test };

    std::filesystem::path images_path;
    std::filesystem::path labels_path;
    role split{ role::train };
};

/// MNIST rows scaled to [0, 1] with raw digit labels.
struct mnist_dataset {
    matrix features;
    std::vector<std::uint8_t> digits;

    [[nodiscard]] std::size_t size() const noexcept { return digits.size(); }
};

inline constexpr std::size_t mnist_side = 28;

/// Builds the dataset from already-decoded IDX payloads.
[[nodiscard]] inline mnist_dataset mnist_from_idx(const idx_images &images, const idx_labels &labels) {
    if (images.rows != mnist_side) {
        throw idx_parse_error{ "expected 28 image rows, got " + std::to_string(images.rows), 8 };
    }
    if (images.cols != mnist_side) {
        throw idx_parse_error{ "expected 28 image columns, got " + std::to_string(images.cols), 12 };
    }
    if (images.count != labels.labels.size()) {
        throw idx_parse_error{ "image count " + std::to_string(images.count) + " does not match label count " + std::to_string(labels.labels.size()), 4 };
    }
    const std::size_t p = images.rows * images.cols;
    std::vector<double> values(images.pixels.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<double>(images.pixels[i]) / 255.0;
    }
    return { matrix{ images.count, p, std::move(values) }, labels.labels };
}

[[nodiscard]] inline mnist_dataset load_mnist(const mnist_source &source) {
    const auto image_bytes = read_idx_bytes(source.images_path);
    const auto label_bytes = read_idx_bytes(source.labels_path);
    try {
        return mnist_from_idx(parse_idx_images(image_bytes), parse_idx_labels(label_bytes));
    } catch (const idx_parse_error &e) {
        throw idx_parse_error{ source.images_path.string() + " / " + source.labels_path.string() + ": " + e.message(), e.offset() };
    }
}

/// Rows whose digit is in `keep`, original order.
[[nodiscard]] inline mnist_dataset filter_digits(const mnist_dataset &data, const std::set<std::uint8_t> &keep) {
    index_list rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (keep.contains(data.digits[i])) {
            rows.push_back(i);
        }
    }
    std::vector<std::uint8_t> digits;
    digits.reserve(rows.size());
    for (const std::size_t r : rows) {
        digits.push_back(data.digits[r]);
    }
    return { data.features.select_rows(rows), std::move(digits) };
}

}  // namespace bcops

#endif  // BCOPS_DATAGEN_HPP_
