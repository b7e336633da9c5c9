#include "latentcd/diffusion.hpp"

#include <cmath>
#include <stdexcept>

#include "latentcd/errors.hpp"

namespace latentcd {

Vec forward_sample(const Vec& z0, int t, const Vec& eps, const NoiseSchedule& s) {
    if (z0.size() != eps.size()) {
        throw std::invalid_argument("forward_sample: latent/noise dimension mismatch");
    }
    const auto c = s.coeffs_at(t);
    Vec out(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) {
        out[i] = c.alpha_hat * z0[i] + c.sigma_hat * eps[i];
    }
    return out;
}

double noise_mse(const Vec& pred, const Vec& target, Vec* grad) {
    if (pred.size() != target.size()) {
        throw std::invalid_argument("noise_mse: dimension mismatch");
    }
    const double inv_n = 1.0 / double(pred.size());
    double loss = 0.0;
    if (grad) grad->resize(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        loss += d * d;
        if (grad) (*grad)[i] = 2.0 * d * inv_n;
    }
    return loss * inv_n;
}

TeacherTrainer::TeacherTrainer(DenoiserModel model, TeacherConfig cfg, std::uint64_t seed)
    : model_(std::move(model)), cfg_(std::move(cfg)), rng_(seed) {
    if (cfg_.p_uncond < 0.0 || cfg_.p_uncond > 1.0) {
        throw ConfigError("teacher: p_uncond outside [0, 1]");
    }
}

double TeacherTrainer::train_step(const LatentBatch& batch, const NoiseSchedule& s) {
    if (batch.size() == 0) throw ConfigError("teacher: empty batch");
    if (batch.dim != model_.config().latent_dim) {
        throw ConfigError("teacher: batch dimension does not match the model");
    }
    if (model_.config().schedule_steps != s.steps()) {
        throw ConfigError("teacher: model/schedule step-count mismatch");
    }

    TensorList grads = model_.zero_grads();
    double loss_sum = 0.0;
    EvalCache cache;
    Vec grad_eps;
    for (std::size_t row = 0; row < batch.size(); ++row) {
        // Fixed per-row draw order: timestep, dropout coin, noise vector.
        const int t = 1 + int(rng_.uniform_int(std::uint64_t(s.steps())));
        const bool drop = rng_.uniform() < cfg_.p_uncond;
        const Vec eps = rng_.normal_vec(batch.z[row].size());

        const Condition& c = drop ? Condition::null_condition() : batch.cond[row];
        const Vec z_t = forward_sample(batch.z[row], t, eps, s);
        const Vec pred = model_.eval(z_t, t, c, &cache);
        loss_sum += noise_mse(pred, eps, &grad_eps);
        model_.backward_accum(cache, grad_eps, grads);
    }

    const double inv_b = 1.0 / double(batch.size());
    for (auto& g : grads) {
        for (double& v : g.data) v *= inv_b;
    }
    const double loss = loss_sum * inv_b;
    if (!std::isfinite(loss)) {
        throw DivergenceError("teacher: non-finite loss at step " + std::to_string(step_));
    }
    cfg_.optimizer.apply(model_.params(), grads);
    ++step_;
    return loss;
}

Vec ancestral_step(const EpsFn& eps, const Vec& z_t, int t, const Condition& c,
                   const NoiseSchedule& s, const Vec& noise) {
    if (t < 1 || t > s.steps()) {
        throw std::out_of_range("ancestral_step: step outside 1..T");
    }
    if (noise.size() != z_t.size()) {
        throw std::invalid_argument("ancestral_step: noise dimension mismatch");
    }
    const auto co = s.coeffs_at(t);
    const Vec eps_hat = eps(z_t, t, c);
    if (eps_hat.size() != z_t.size()) {
        throw std::invalid_argument("ancestral_step: predictor dimension mismatch");
    }
    // Posterior scale choice: sigma_t = sqrt(beta_t); the final step (t = 1)
    // is deterministic.
    const double mean_coef = (1.0 - co.alpha) / co.sigma_hat;
    const double inv_sqrt_alpha = 1.0 / std::sqrt(co.alpha);
    const double sigma_t = t > 1 ? std::sqrt(co.beta) : 0.0;
    Vec out(z_t.size());
    for (std::size_t i = 0; i < z_t.size(); ++i) {
        out[i] = inv_sqrt_alpha * (z_t[i] - mean_coef * eps_hat[i]) + sigma_t * noise[i];
    }
    return out;
}

Vec ancestral_sample(const EpsFn& eps, const Condition& c, const NoiseSchedule& s,
                     int dim, Rng& rng) {
    if (dim < 1) throw std::invalid_argument("ancestral_sample: dim must be >= 1");
    Vec z = rng.normal_vec(std::size_t(dim));
    const Vec zero(std::size_t(dim), 0.0);
    for (int t = s.steps(); t >= 1; --t) {
        // Noise is only drawn when the step uses it, keeping the stream
        // layout stable and documented.
        if (t > 1) {
            const Vec noise = rng.normal_vec(std::size_t(dim));
            z = ancestral_step(eps, z, t, c, s, noise);
        } else {
            z = ancestral_step(eps, z, t, c, s, zero);
        }
    }
    return z;
}

Vec ancestral_sample(const EpsFn& eps, const Condition& c, const NoiseSchedule& s,
                     int dim, std::uint64_t seed) {
    Rng rng(seed);
    return ancestral_sample(eps, c, s, dim, rng);
}

}  // namespace latentcd
