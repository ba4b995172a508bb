#pragma once

#include <cstdint>

namespace cvknit {

// SplitMix64. Small, fast, and good enough for Monte Carlo weights; the
// important property here is counter-based construction: the stream for a
// chunk is a pure function of (seed, chunk_index), so parallel and serial
// execution see identical draws.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // One splitmix scramble keeps distinct (seed, stream) pairs decorrelated.
    SplitMix64 s(seed ^ (0xd1342543de82ef95ULL * (stream + 1)));
    return s.next_u64();
}

inline SplitMix64 chunk_rng(std::uint64_t seed, std::uint64_t chunk_index) {
    return SplitMix64(mix_seed(seed, chunk_index));
}

}  // namespace cvknit
