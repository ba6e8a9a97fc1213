#include "survquack/rng.hpp"

namespace survquack {

std::uint64_t tag_hash(std::string_view tag) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_stream_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index) noexcept
{
    const std::uint64_t base = SplitMix64::mix64(master ^ tag_hash(tag));
    return SplitMix64::mix64(base + (index + 1) * SplitMix64::kGamma);
}

} // namespace survquack
