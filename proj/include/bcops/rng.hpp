#ifndef BCOPS_RNG_HPP_
#define BCOPS_RNG_HPP_
#pragma once

#include <cstdint>
#include <random>

namespace bcops {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

}  // namespace detail

/**
 * A named, reproducible source of randomness.
 *
 * A stream is a plain value: the pair (seed, stream_id) fully determines the
 * draw sequence of the engine it produces. Child streams are derived by hashing
 * a tag into the stream id, so independent tasks (trees, folds, sweep cells)
 * never share generator state and any scheduling order gives the same draws.
 */
class rng_stream {
  public:
    using engine_type = std::mt19937_64;

    constexpr rng_stream() noexcept = default;
    constexpr rng_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept :
        seed_{ seed }, stream_id_{ stream_id } {}

    [[nodiscard]] constexpr std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] constexpr std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Child stream for sub-task `tag`; distinct tags give unrelated sequences.
    [[nodiscard]] constexpr rng_stream derive(std::uint64_t tag) const noexcept {
        return { seed_, detail::splitmix64(stream_id_ ^ detail::splitmix64(tag + 0x632be59bd9b4e019ULL)) };
    }

    /// Fresh engine positioned at the start of this stream.
    [[nodiscard]] engine_type engine() const {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32U),
            static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32U)
        };
        return engine_type{ seq };
    }

    friend constexpr bool operator==(const rng_stream &, const rng_stream &) noexcept = default;

  private:
    std::uint64_t seed_{ 0 };
    std::uint64_t stream_id_{ 0 };
};

}  // namespace bcops

#endif  // BCOPS_RNG_HPP_
