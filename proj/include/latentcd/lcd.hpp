#pragma once

#include <cstdint>
#include <functional>

#include "latentcd/ddim.hpp"
#include "latentcd/eps_model.hpp"
#include "latentcd/optimizer.hpp"
#include "latentcd/rng.hpp"
#include "latentcd/schedule.hpp"
#include "latentcd/synthdata.hpp"

namespace latentcd {

// Boundary-condition weights that blend the input with the denoised estimate
// inside the consistency function. With st = time_scale * t:
//   c_skip(t) = sigma_data^2 / (st^2 + sigma_data^2)
//   c_out(t)  = st / sqrt(st^2 + sigma_data^2)
// so c_skip(0) = 1 and c_out(0) = 0 exactly, c_skip is strictly decreasing,
// and for every t >= 1 the denoised estimate dominates (time_scale pushes the
// crossover well below the first step). The steep profile matters: training
// never updates timesteps below the solver skip, so the map the chain
// bootstraps from at those anchor steps must already be near the denoised
// estimate, which holds only when c_skip(t>=1) ~ 0 and c_out(t>=1) ~ 1.
struct ConsistencyShape {
    double sigma_data = 0.5;
    double time_scale = 10.0;
};

double c_skip(int t, const ConsistencyShape& shape = {});
double c_out(int t, const ConsistencyShape& shape = {});

// F(z_t, t) = c_skip(t) z_t + c_out(t) (z_t - sigma_hat(t) eps(z_t,t,c)) / alpha_hat(t).
// t = 0 returns z_t without evaluating the predictor (exact boundary).
Vec consistency_fn(const EpsFn& eps, const Vec& z_t, int t, const Condition& c,
                   const NoiseSchedule& s, const ConsistencyShape& shape = {});

// One-call form of the map above, so samplers can run against either a
// predictor-backed map or an exact oracle map.
using ConsistencyMap = std::function<Vec(const Vec& z_t, int t, const Condition& c)>;

ConsistencyMap consistency_from_eps(EpsFn eps, const NoiseSchedule& s,
                                    const ConsistencyShape& shape = {});
// Exact transport-to-origin map for a diagonal Gaussian prior (condition
// independent); the reference a learned map is judged against.
ConsistencyMap consistency_from_oracle(GaussianOracle o, const NoiseSchedule& s);

// theta_minus <- mu * theta_minus + (1 - mu) * theta, element-wise.
void ema_update(TensorList& theta_minus, const TensorList& theta, double mu);

struct LcdConfig {
    double ema_rate = 0.95;  // mu
    double guidance = 0.3;   // omega
    int skip = 10;           // solver jump k
    ConsistencyShape shape;
    Optimizer optimizer;
};

// Consistency distillation against a frozen teacher predictor. Per row:
// draw t ~ Uniform{1..T-k}, noise the latent to t+k, jump the teacher's
// guided solver to t, and pull the student map at t+k toward the EMA map at
// t (stop-gradient). Only the student receives gradients; the EMA copy moves
// through ema_update() alone.
class LcdTrainer {
public:
    LcdTrainer(DenoiserModel student_init, EpsFn teacher, LcdConfig cfg,
               const NoiseSchedule& s, std::uint64_t seed);

    // One optimizer update over the batch; returns the batch loss.
    double distill_step(const LatentBatch& batch);

    // Squared-L2 consistency loss (mean over coordinates) for one already
    // noised latent z_tk at step t+k against the EMA branch at step t, with
    // 1 <= t <= T-k. Accumulates student gradients into grads when non-null.
    double lcd_loss(const Vec& z_tk, int t, const Condition& c, TensorList* grads);

    // Monitor: mean RMS gap between the student map at consecutive points of
    // teacher-solver trajectories (F(z_t,t) vs F(z_{t-k},t-k)), averaged over
    // chains started from fresh noise with conditions cycled from probe.
    double self_consistency_gap(const LatentBatch& probe, int chains = 8,
                                std::uint64_t seed = 0x5eed) const;

    const DenoiserModel& student() const { return student_; }
    const DenoiserModel& ema() const { return ema_; }
    const LcdConfig& config() const { return cfg_; }
    long long step() const { return step_; }
    void ema_step();  // exposed for tests; distill_step calls it

private:
    DenoiserModel student_;
    DenoiserModel ema_;
    EpsFn teacher_;
    LcdConfig cfg_;
    NoiseSchedule sched_;
    Rng rng_;
    long long step_ = 0;
};

}  // namespace latentcd
