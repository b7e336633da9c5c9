#pragma once

#include <cstdint>
#include <vector>

#include "latentcd/f0.hpp"
#include "latentcd/lcd.hpp"
#include "latentcd/rng.hpp"

namespace latentcd {

// Inner timesteps for n_steps-step inference: tau_n = round(T (N - n) / N)
// for n = 1..N-1, clamped to 1..T-1, kept strictly decreasing. Empty for
// N = 1 (single jump from pure noise).
std::vector<int> make_tau_sequence(int n_steps, int schedule_steps);

// Few-step consistency sampling: one map call from fresh noise at T, then for
// each tau re-noise the running estimate to tau's marginal and map again:
//   z ~ N(0, I);  z0 = F(z, T)
//   for tau:  z = alpha_hat(tau) z0 + sigma_hat(tau) e,  e ~ N(0, I)
//             z0 = F(z, tau)
Vec lcm_sample(const ConsistencyMap& f, const Condition& c, const std::vector<int>& taus,
               const NoiseSchedule& s, int dim, Rng& rng);
Vec lcm_sample(const ConsistencyMap& f, const Condition& c, const std::vector<int>& taus,
               const NoiseSchedule& s, int dim, std::uint64_t seed);

// Cross-combination condition: source content, source F0 shifted to the
// target's voiced mean and re-quantized, target speaker embedding.
Condition conversion_condition(const Vec& content_src, const F0Contour& f0_src,
                               double target_voiced_mean, const Vec& speaker_tar);

// Conversion = few-step sampling under the cross-combined condition.
Vec convert(const ConsistencyMap& f, const Vec& content_src, const F0Contour& f0_src,
            double target_voiced_mean, const Vec& speaker_tar,
            const std::vector<int>& taus, const NoiseSchedule& s, int dim,
            std::uint64_t seed);

}  // namespace latentcd
