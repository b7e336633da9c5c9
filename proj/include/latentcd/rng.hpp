#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace latentcd {

// Deterministic random stream. std::mt19937_64 output is bit-exact per the
// C++ standard, and every distribution mapping below is spelled out here
// instead of relying on <random> distribution objects (whose streams are
// implementation defined). Same seed + same call sequence => same draws on
// any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1): 53-bit mantissa scaling.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller on (0, 1] uniforms; pairs are cached, so
    // draws alternate between fresh generator calls and the cached mate.
    double normal();

    // Uniform in {0, ..., n-1}, unbiased (rejection on the modulus threshold).
    std::uint64_t uniform_int(std::uint64_t n);

    std::vector<double> normal_vec(std::size_t n);

private:
    // Uniform in (0, 1], safe as a log() argument.
    double uniform_pos() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace latentcd
