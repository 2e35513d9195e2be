#pragma once

#include <cstdint>

namespace macrodim {

// 64-bit finalizer with full avalanche (splitmix64). Used both as the mixing
// primitive for keyed hashing and as the per-stream generator state update.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Independent stream for a trial/walk index. Streams derived from the same
// master seed with distinct indices are decorrelated, so Monte Carlo loops can
// be partitioned across threads without changing the results.
inline constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) noexcept {
    return hash_combine(mix64(seed), index);
}

inline constexpr double u64_to_unit(std::uint64_t x) noexcept {
    return static_cast<double>(x >> 11) * 0x1.0p-53;  // [0, 1)
}

// Counter-based generator: state advances by a fixed increment, output is the
// avalanche of the state. Cheap, seekable, and good enough statistically for
// the Monte Carlo work in this library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) noexcept : state_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

    std::uint64_t next_u64() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double next_unit() noexcept { return u64_to_unit(next_u64()); }

    // Unbiased-enough index in [0, n): fixed-point multiply of the full word.
    std::uint64_t next_below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

  private:
    std::uint64_t state_;
};

}  // namespace macrodim
