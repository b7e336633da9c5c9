#pragma once

#include <cstdint>

#include "latentcd/denoiser.hpp"
#include "latentcd/eps_model.hpp"
#include "latentcd/optimizer.hpp"
#include "latentcd/rng.hpp"
#include "latentcd/schedule.hpp"
#include "latentcd/synthdata.hpp"

namespace latentcd {

// z_t = alpha_hat(t) z0 + sigma_hat(t) eps. t = 0 returns z0 unchanged.
Vec forward_sample(const Vec& z0, int t, const Vec& eps, const NoiseSchedule& s);

// Noise-space MSE, mean over coordinates. If grad is non-null it receives
// d loss / d pred.
double noise_mse(const Vec& pred, const Vec& target, Vec* grad = nullptr);

struct TeacherConfig {
    double p_uncond = 0.1;  // condition dropout probability
    Optimizer optimizer;
};

// Trains the noise predictor: per row draw t ~ Uniform{1..T}, noise the
// latent, drop the condition to the null embedding with probability p_uncond,
// and regress predicted noise on the injected noise.
class TeacherTrainer {
public:
    TeacherTrainer(DenoiserModel model, TeacherConfig cfg, std::uint64_t seed);

    // One optimizer update over the batch; returns the batch loss. Per-row
    // draw order is fixed (t, dropout coin, noise vector) for reproducibility.
    double train_step(const LatentBatch& batch, const NoiseSchedule& s);

    const DenoiserModel& model() const { return model_; }
    DenoiserModel& model() { return model_; }
    long long step() const { return step_; }

private:
    DenoiserModel model_;
    TeacherConfig cfg_;
    Rng rng_;
    long long step_ = 0;
};

// One ancestral reverse update z_t -> z_{t-1} with decided posterior scale
// sigma_t = sqrt(beta_t). noise supplies the injected Gaussian; it is ignored
// at t = 1 where the final step is deterministic.
Vec ancestral_step(const EpsFn& eps, const Vec& z_t, int t, const Condition& c,
                   const NoiseSchedule& s, const Vec& noise);

// Full T-step ancestral chain from fresh Gaussian noise.
Vec ancestral_sample(const EpsFn& eps, const Condition& c, const NoiseSchedule& s,
                     int dim, Rng& rng);
Vec ancestral_sample(const EpsFn& eps, const Condition& c, const NoiseSchedule& s,
                     int dim, std::uint64_t seed);

}  // namespace latentcd
