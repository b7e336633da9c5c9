#include "latentcd/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "latentcd/errors.hpp"

namespace latentcd {

namespace {

void check_range(int t, int lo, int hi, const char* what) {
    if (t < lo || t > hi) {
        throw std::out_of_range(std::string(what) + ": step " + std::to_string(t) +
                                " outside " + std::to_string(lo) + ".." +
                                std::to_string(hi));
    }
}

}  // namespace

NoiseSchedule NoiseSchedule::linear(int steps, double beta_min, double beta_max) {
    if (steps < 1) throw ConfigError("schedule: steps must be >= 1");
    if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max) {
        throw ConfigError("schedule: need 0 < beta_min <= beta_max < 1");
    }
    NoiseSchedule s;
    s.steps_ = steps;
    s.beta_.assign(steps + 1, 0.0);
    s.alpha_bar_.assign(steps + 1, 1.0);
    s.alpha_hat_.assign(steps + 1, 1.0);
    s.sigma_hat_.assign(steps + 1, 0.0);
    for (int t = 1; t <= steps; ++t) {
        const double frac = steps > 1 ? double(t - 1) / double(steps - 1) : 0.0;
        s.beta_[t] = beta_min + (beta_max - beta_min) * frac;
        s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - s.beta_[t]);
        s.alpha_hat_[t] = std::sqrt(s.alpha_bar_[t]);
        s.sigma_hat_[t] = std::sqrt(1.0 - s.alpha_bar_[t]);
    }
    return s;
}

double NoiseSchedule::beta(int t) const {
    check_range(t, 1, steps_, "beta");
    return beta_[t];
}

double NoiseSchedule::alpha(int t) const {
    check_range(t, 1, steps_, "alpha");
    return 1.0 - beta_[t];
}

double NoiseSchedule::alpha_bar(int t) const {
    check_range(t, 0, steps_, "alpha_bar");
    return alpha_bar_[t];
}

double NoiseSchedule::alpha_hat(int t) const {
    check_range(t, 0, steps_, "alpha_hat");
    return alpha_hat_[t];
}

double NoiseSchedule::sigma_hat(int t) const {
    check_range(t, 0, steps_, "sigma_hat");
    return sigma_hat_[t];
}

NoiseSchedule::Coeffs NoiseSchedule::coeffs_at(int t) const {
    check_range(t, 0, steps_, "coeffs_at");
    if (t == 0) return {1.0, 0.0, 1.0, 0.0};
    return {alpha_hat_[t], sigma_hat_[t], 1.0 - beta_[t], beta_[t]};
}

}  // namespace latentcd
