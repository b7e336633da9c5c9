#include "latentcd/lcm.hpp"

#include <cmath>
#include <stdexcept>

#include "latentcd/diffusion.hpp"
#include "latentcd/errors.hpp"

namespace latentcd {

std::vector<int> make_tau_sequence(int n_steps, int schedule_steps) {
    if (schedule_steps < 1) throw ConfigError("tau sequence: schedule steps must be >= 1");
    if (n_steps < 1 || n_steps > schedule_steps) {
        throw ConfigError("tau sequence: step count outside 1..T");
    }
    std::vector<int> taus;
    int prev = schedule_steps;
    for (int n = 1; n < n_steps; ++n) {
        int tau = int(std::llround(double(schedule_steps) * double(n_steps - n) /
                                   double(n_steps)));
        if (tau > schedule_steps - 1) tau = schedule_steps - 1;
        if (tau < 1) tau = 1;
        // Uniform rounding can collide on coarse schedules; keep the sequence
        // strictly decreasing by skipping duplicates.
        if (tau >= prev) continue;
        taus.push_back(tau);
        prev = tau;
    }
    return taus;
}

Vec lcm_sample(const ConsistencyMap& f, const Condition& c, const std::vector<int>& taus,
               const NoiseSchedule& s, int dim, Rng& rng) {
    if (!f) throw std::invalid_argument("lcm_sample: missing consistency map");
    if (dim < 1) throw std::invalid_argument("lcm_sample: dim must be >= 1");
    int prev = s.steps();
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (taus[i] < 1 || taus[i] >= prev) {
            throw ConfigError("lcm_sample: taus must be strictly decreasing within 1..T-1");
        }
        prev = taus[i];
    }

    // One jump from pure noise, then noise-injection / re-denoise rounds.
    Vec z = rng.normal_vec(std::size_t(dim));
    Vec z0 = f(z, s.steps(), c);
    for (int tau : taus) {
        const auto co = s.coeffs_at(tau);
        const Vec eps = rng.normal_vec(std::size_t(dim));
        for (int i = 0; i < dim; ++i) {
            z[i] = co.alpha_hat * z0[i] + co.sigma_hat * eps[i];
        }
        z0 = f(z, tau, c);
    }
    return z0;
}

Vec lcm_sample(const ConsistencyMap& f, const Condition& c, const std::vector<int>& taus,
               const NoiseSchedule& s, int dim, std::uint64_t seed) {
    Rng rng(seed);
    return lcm_sample(f, c, taus, s, dim, rng);
}

Condition conversion_condition(const Vec& content_src, const F0Contour& f0_src,
                               double target_voiced_mean, const Vec& speaker_tar) {
    Condition c;
    c.content = content_src;
    c.f0_bins = quantize_log_f0(shift_f0(f0_src, target_voiced_mean));
    c.speaker = speaker_tar;
    return c;
}

Vec convert(const ConsistencyMap& f, const Vec& content_src, const F0Contour& f0_src,
            double target_voiced_mean, const Vec& speaker_tar,
            const std::vector<int>& taus, const NoiseSchedule& s, int dim,
            std::uint64_t seed) {
    const Condition c =
        conversion_condition(content_src, f0_src, target_voiced_mean, speaker_tar);
    return lcm_sample(f, c, taus, s, dim, seed);
}

}  // namespace latentcd
