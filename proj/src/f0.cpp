#include "latentcd/f0.hpp"

#include <cmath>

#include "latentcd/errors.hpp"

namespace latentcd {

double voiced_mean(const F0Contour& c) {
    if (c.hz.empty()) throw ConfigError("voiced_mean: empty contour");
    double sum = 0.0;
    std::size_t n = 0;
    for (double f : c.hz) {
        if (f > 0.0) {
            sum += f;
            ++n;
        }
    }
    if (n == 0) throw ConfigError("voiced_mean: contour has no voiced frames");
    return sum / double(n);
}

F0Contour shift_f0(const F0Contour& src, double target_voiced_mean) {
    if (!(target_voiced_mean > 0.0)) {
        throw ConfigError("shift_f0: target voiced mean must be positive");
    }
    const double ratio = target_voiced_mean / voiced_mean(src);
    F0Contour out;
    out.hz.reserve(src.hz.size());
    for (double f : src.hz) out.hz.push_back(f > 0.0 ? f * ratio : 0.0);
    return out;
}

int quantize_log_f0_value(double hz) {
    if (!(hz > 0.0)) throw ConfigError("quantize_log_f0_value: frequency must be positive");
    const double lo = std::log(kF0MinHz);
    const double hi = std::log(kF0MaxHz);
    const double pos = (std::log(hz) - lo) / (hi - lo);
    int bin = 1 + int(std::floor(pos * double(kF0Bins - 1)));
    if (bin < 1) bin = 1;
    if (bin > kF0Bins - 1) bin = kF0Bins - 1;
    return bin;
}

std::vector<int> quantize_log_f0(const F0Contour& c) {
    if (c.hz.empty()) throw ConfigError("quantize_log_f0: empty contour");
    std::vector<int> bins;
    bins.reserve(c.hz.size());
    for (double f : c.hz) bins.push_back(f > 0.0 ? quantize_log_f0_value(f) : 0);
    return bins;
}

}  // namespace latentcd
