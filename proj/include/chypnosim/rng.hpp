#pragma once

#include <cstdint>
#include <random>

namespace chypnosim {

/// Independent generator for (seed, stream, index). Streams name the consumer
/// (race trials, trace synthesis, ...) so that unrelated draws never alias.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

namespace streams {
inline constexpr std::uint64_t race_trial = 0x7261636501ULL;
inline constexpr std::uint64_t leakage_model = 0x6c65616b01ULL;
inline constexpr std::uint64_t profiling_trace = 0x70726f6601ULL;
inline constexpr std::uint64_t attack_trace = 0x61747401ULL;
inline constexpr std::uint64_t stump = 0x7374756d01ULL;
inline constexpr std::uint64_t scenario = 0x7363656e01ULL;
inline constexpr std::uint64_t attack_key = 0x6b657901ULL;
} // namespace streams

} // namespace chypnosim
