#include "latentcd/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace latentcd {

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    // Reject draws below 2^64 mod n so every residue is equally likely.
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x = gen_();
    while (x < threshold) x = gen_();
    return x % n;
}

std::vector<double> Rng::normal_vec(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = normal();
    return out;
}

}  // namespace latentcd
