#pragma once

#include <cstdint>
#include <limits>

namespace iondetect {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream: the state for (seed, stream) is a pure function of
/// both, so results do not depend on which thread draws which stream.
/// Satisfies UniformRandomBitGenerator.
class StreamRng {
public:
    using result_type = std::uint64_t;

    constexpr StreamRng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix64(seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL)))
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()()
    {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Seed for a sub-stream family (e.g. per-frame seeds derived from a run seed).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag)
{
    return mix64(seed + 0x632be59bd9b4e019ULL * (tag + 1));
}

}  // namespace iondetect
