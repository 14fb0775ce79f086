#pragma once

#include <cstdint>
#include <random>

namespace csifb {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates nearby stream ids.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent stream for (master seed, stream id). Streams are
/// order-independent, so sample i can be generated without drawing
/// samples 0..i-1 first.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(mix64(seed ^ mix64(stream_id)));
}

// Stream-id bases; one block per independent consumer of randomness.
namespace stream {
constexpr std::uint64_t kDetInit = 1;
constexpr std::uint64_t kRecInit = 2;
constexpr std::uint64_t kDetShuffle = 0x0100'0000'0000ULL;  // + epoch
constexpr std::uint64_t kRecShuffle = 0x0200'0000'0000ULL;  // + epoch
constexpr std::uint64_t kMeasurement = 3;
constexpr std::uint64_t kDetTrain = 0x1000'0000'0000ULL;    // + sample index
constexpr std::uint64_t kDetVal = 0x2000'0000'0000ULL;
constexpr std::uint64_t kDetTest = 0x3000'0000'0000ULL;
constexpr std::uint64_t kRecTrain = 0x4000'0000'0000ULL;
constexpr std::uint64_t kRecVal = 0x5000'0000'0000ULL;
constexpr std::uint64_t kRecTest = 0x6000'0000'0000ULL;
// Evaluation frames: base + (snr index << 40) + frame index.
constexpr std::uint64_t kEval = 0x8000'0000'0000ULL;
inline std::uint64_t eval_frame(std::size_t snr_index, std::uint64_t frame) {
    return kEval + (static_cast<std::uint64_t>(snr_index) << 40) + frame;
}
} // namespace stream

} // namespace csifb
