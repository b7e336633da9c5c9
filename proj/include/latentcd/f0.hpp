#pragma once

#include <vector>

namespace latentcd {

// Per-frame fundamental frequency in Hz; 0 encodes an unvoiced frame.
struct F0Contour {
    std::vector<double> hz;

    std::size_t frames() const { return hz.size(); }
};

inline constexpr double kF0MinHz = 50.0;
inline constexpr double kF0MaxHz = 1100.0;
inline constexpr int kF0Bins = 256;  // bin 0 is reserved for unvoiced frames

// Arithmetic mean over voiced frames only.
double voiced_mean(const F0Contour& c);

// Scales every voiced frame by target_voiced_mean / voiced_mean(src) so the
// shifted contour's voiced mean equals the target. Unvoiced frames stay 0.
F0Contour shift_f0(const F0Contour& src, double target_voiced_mean);

// Log-spaced quantization of one voiced frequency to bins 1..255 between
// kF0MinHz and kF0MaxHz (out-of-range values clamp to the edge bins).
int quantize_log_f0_value(double hz);

// Whole-contour quantization; unvoiced frames map to bin 0.
std::vector<int> quantize_log_f0(const F0Contour& c);

}  // namespace latentcd
