#pragma once

#include <functional>
#include <memory>

#include "latentcd/condition.hpp"
#include "latentcd/denoiser.hpp"
#include "latentcd/schedule.hpp"
#include "latentcd/synthdata.hpp"

namespace latentcd {

// Noise-predictor abstraction shared by every solver and sampler: either the
// trained network or a closed-form oracle can sit behind it, so the same
// machinery is testable against exact answers.
using EpsFn = std::function<Vec(const Vec& z_t, int t, const Condition& c)>;

// Borrows the model; the caller keeps it alive.
EpsFn eps_from_model(const DenoiserModel& m);
// Shares ownership; safe to outlive the original handle.
EpsFn eps_from_model(std::shared_ptr<const DenoiserModel> m);
// Condition-independent exact predictor for a diagonal Gaussian prior.
EpsFn eps_from_oracle(GaussianOracle o, const NoiseSchedule& s);

// Wraps fn so every call bumps *counter. Used by the latency benchmark to
// measure denoiser invocations per sample.
EpsFn counted_eps(EpsFn fn, std::shared_ptr<std::size_t> counter);

// Classifier-free guided predictor: (1 + w) fn(z,t,c) - w fn(z,t,null).
EpsFn guided_eps(EpsFn fn, double guidance);

}  // namespace latentcd
