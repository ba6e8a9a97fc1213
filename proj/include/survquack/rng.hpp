#pragma once

#include <cstdint>
#include <string_view>

namespace survquack {

// SplitMix64 used as a counter-based generator: the i-th output of a stream
// with seed s is mix64(s + (i + 1) * kGamma). Streams are cheap to create and
// carry no shared state, so each replication, arm, or purpose owns one.
class SplitMix64 {
public:
    using result_type = std::uint64_t;
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept
    {
        state_ += kGamma;
        return mix64(state_);
    }

    /// Uniform double strictly inside (0, 1): (top 52 bits + 0.5) / 2^52. With 53
    /// bits the largest value rounds to exactly 1.
    constexpr double uniform() noexcept
    {
        return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52;
    }

    static constexpr std::uint64_t mix64(std::uint64_t z) noexcept
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// FNV-1a over the tag bytes; stable across platforms and compilers.
std::uint64_t tag_hash(std::string_view tag) noexcept;

/// Seed of the stream identified by (master, purpose tag, index):
///   mix64(mix64(master ^ tag_hash(tag)) + (index + 1) * kGamma)
/// A pure function, so any worker can rebuild any stream independently.
std::uint64_t derive_stream_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index) noexcept;

inline SplitMix64 make_stream(std::uint64_t master, std::string_view tag,
                              std::uint64_t index) noexcept
{
    return SplitMix64(derive_stream_seed(master, tag, index));
}

} // namespace survquack
