#pragma once

#include <vector>

namespace latentcd {

// Discrete variance-preserving noise schedule over steps 1..T together with
// the cumulative quantities everything else consumes:
//
//   alpha(t)     = 1 - beta(t)
//   alpha_bar(t) = prod_{s<=t} alpha(s),   alpha_bar(0) = 1
//   alpha_hat(t) = sqrt(alpha_bar(t))        (marginal signal scale)
//   sigma_hat(t) = sqrt(1 - alpha_bar(t))    (marginal noise scale)
//
// t = 0 is the clean-data boundary: alpha_hat(0) = 1, sigma_hat(0) = 0.
class NoiseSchedule {
public:
    // Betas linearly spaced from beta_min (t = 1) to beta_max (t = T).
    static NoiseSchedule linear(int steps, double beta_min, double beta_max);

    int steps() const { return steps_; }

    double beta(int t) const;       // t in 1..T
    double alpha(int t) const;      // t in 1..T
    double alpha_bar(int t) const;  // t in 0..T
    double alpha_hat(int t) const;  // t in 0..T
    double sigma_hat(int t) const;  // t in 0..T

    struct Coeffs {
        double alpha_hat;
        double sigma_hat;
        double alpha;
        double beta;
    };
    // All coefficients at once; t = 0 yields {1, 0, 1, 0}.
    Coeffs coeffs_at(int t) const;

private:
    NoiseSchedule() = default;

    int steps_ = 0;
    std::vector<double> beta_;       // [T+1], slot 0 unused
    std::vector<double> alpha_bar_;  // [T+1]
    std::vector<double> alpha_hat_;  // [T+1]
    std::vector<double> sigma_hat_;  // [T+1]
};

}  // namespace latentcd
