#pragma once

#include "latentcd/eps_model.hpp"
#include "latentcd/schedule.hpp"

namespace latentcd {

// Deterministic solver jump t_from -> t_to (t_to < t_from, both in 0..T):
// reconstruct the origin estimate from the noise prediction, then re-noise it
// to the target marginal along the same noise direction:
//   z0_hat = (z - sigma_hat(t_from) eps_hat) / alpha_hat(t_from)
//   out    = alpha_hat(t_to) z0_hat + sigma_hat(t_to) eps_hat
// t_to == t_from returns z_from exactly (no predictor call).
Vec ddim_step(const EpsFn& eps, const Vec& z_from, int t_from, int t_to,
              const Condition& c, const NoiseSchedule& s);

// Classifier-free-guided solver target, composed at the solver output:
//   (1 + w) step(c) - w step(null)
// so the two branches share z_from and the jump but differ in conditioning.
Vec guided_target(const EpsFn& eps, const Vec& z_from, int t_from, int t_to,
                  const Condition& c, double guidance, const NoiseSchedule& s);

}  // namespace latentcd
