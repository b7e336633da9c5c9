#include "latentcd/lcd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "latentcd/diffusion.hpp"
#include "latentcd/errors.hpp"

namespace latentcd {

namespace {

void check_shape(const ConsistencyShape& shape) {
    if (!(shape.sigma_data > 0.0) || !(shape.time_scale > 0.0)) {
        throw ConfigError("consistency shape: sigma_data and time_scale must be positive");
    }
}

void check_t(int t) {
    if (t < 0) throw std::out_of_range("consistency weights: negative step");
}

}  // namespace

double c_skip(int t, const ConsistencyShape& shape) {
    check_shape(shape);
    check_t(t);
    const double st = shape.time_scale * double(t);
    const double sd2 = shape.sigma_data * shape.sigma_data;
    return sd2 / (st * st + sd2);
}

double c_out(int t, const ConsistencyShape& shape) {
    check_shape(shape);
    check_t(t);
    const double st = shape.time_scale * double(t);
    const double sd2 = shape.sigma_data * shape.sigma_data;
    return st / std::sqrt(st * st + sd2);
}

Vec consistency_fn(const EpsFn& eps, const Vec& z_t, int t, const Condition& c,
                   const NoiseSchedule& s, const ConsistencyShape& shape) {
    if (t == 0) return z_t;  // boundary: the map is the identity, no predictor call
    const auto co = s.coeffs_at(t);
    const double skip = c_skip(t, shape);
    const double out_w = c_out(t, shape);
    const Vec eps_hat = eps(z_t, t, c);
    if (eps_hat.size() != z_t.size()) {
        throw std::invalid_argument("consistency_fn: predictor dimension mismatch");
    }
    Vec out(z_t.size());
    for (std::size_t i = 0; i < z_t.size(); ++i) {
        const double z0_hat = (z_t[i] - co.sigma_hat * eps_hat[i]) / co.alpha_hat;
        out[i] = skip * z_t[i] + out_w * z0_hat;
    }
    return out;
}

ConsistencyMap consistency_from_eps(EpsFn eps, const NoiseSchedule& s,
                                    const ConsistencyShape& shape) {
    check_shape(shape);
    return [eps = std::move(eps), s, shape](const Vec& z, int t, const Condition& c) {
        return consistency_fn(eps, z, t, c, s, shape);
    };
}

ConsistencyMap consistency_from_oracle(GaussianOracle o, const NoiseSchedule& s) {
    return [o = std::move(o), s](const Vec& z, int t, const Condition&) {
        return oracle_origin(o, z, t, s);
    };
}

void ema_update(TensorList& theta_minus, const TensorList& theta, double mu) {
    if (mu < 0.0 || mu > 1.0) throw ConfigError("ema_update: mu outside [0, 1]");
    if (theta_minus.size() != theta.size()) {
        throw ConfigError("ema_update: parameter list mismatch");
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (theta_minus[i].size() != theta[i].size()) {
            throw ConfigError("ema_update: tensor shape mismatch at '" + theta[i].name + "'");
        }
        for (std::size_t j = 0; j < theta[i].size(); ++j) {
            theta_minus[i].data[j] =
                mu * theta_minus[i].data[j] + (1.0 - mu) * theta[i].data[j];
        }
    }
}

LcdTrainer::LcdTrainer(DenoiserModel student_init, EpsFn teacher, LcdConfig cfg,
                       const NoiseSchedule& s, std::uint64_t seed)
    : student_(std::move(student_init)),
      ema_(student_),  // EMA branch starts as an exact copy of the student
      teacher_(std::move(teacher)),
      cfg_(std::move(cfg)),
      sched_(s),
      rng_(seed) {
    check_shape(cfg_.shape);
    if (cfg_.ema_rate < 0.0 || cfg_.ema_rate > 1.0) {
        throw ConfigError("lcd: ema rate outside [0, 1]");
    }
    if (cfg_.guidance < 0.0) throw ConfigError("lcd: guidance weight negative");
    if (cfg_.skip < 1 || cfg_.skip >= sched_.steps()) {
        throw ConfigError("lcd: skip must satisfy 1 <= k <= T-1");
    }
    if (student_.config().schedule_steps != sched_.steps()) {
        throw ConfigError("lcd: student/schedule step-count mismatch");
    }
    if (!teacher_) throw ConfigError("lcd: missing teacher predictor");
}

double LcdTrainer::lcd_loss(const Vec& z_tk, int t, const Condition& c,
                            TensorList* grads) {
    const int k = cfg_.skip;
    if (t < 1 || t > sched_.steps() - k) {
        throw std::out_of_range("lcd_loss: step outside 1..T-k");
    }
    if (int(z_tk.size()) != student_.config().latent_dim) {
        throw std::invalid_argument("lcd_loss: latent dimension mismatch");
    }

    // Teacher solver jump t+k -> t with classifier-free guidance, then the
    // EMA branch's map there; both sit on the stop-gradient side.
    const Vec z_solved =
        guided_target(teacher_, z_tk, t + k, t, c, cfg_.guidance, sched_);
    const EpsFn ema_eps = eps_from_model(ema_);
    const Vec target = consistency_fn(ema_eps, z_solved, t, c, sched_, cfg_.shape);

    // Student branch at t+k, kept differentiable.
    const auto co = sched_.coeffs_at(t + k);
    const double skip_w = c_skip(t + k, cfg_.shape);
    const double out_w = c_out(t + k, cfg_.shape);
    EvalCache cache;
    const Vec eps_hat = student_.eval(z_tk, t + k, c, &cache);

    const std::size_t d = z_tk.size();
    double loss = 0.0;
    Vec grad_eps(d);
    const double inv_d = 1.0 / double(d);
    const double deps_coef = -out_w * co.sigma_hat / co.alpha_hat;
    for (std::size_t i = 0; i < d; ++i) {
        const double z0_hat = (z_tk[i] - co.sigma_hat * eps_hat[i]) / co.alpha_hat;
        const double student_val = skip_w * z_tk[i] + out_w * z0_hat;
        const double diff = student_val - target[i];
        loss += diff * diff;
        grad_eps[i] = 2.0 * diff * inv_d * deps_coef;
    }
    loss *= inv_d;
    if (grads) student_.backward_accum(cache, grad_eps, *grads);
    return loss;
}

double LcdTrainer::distill_step(const LatentBatch& batch) {
    if (batch.size() == 0) throw ConfigError("lcd: empty batch");
    if (batch.dim != student_.config().latent_dim) {
        throw ConfigError("lcd: batch dimension does not match the student");
    }
    const int k = cfg_.skip;
    const int t_max = sched_.steps() - k;

    TensorList grads = student_.zero_grads();
    double loss_sum = 0.0;
    for (std::size_t row = 0; row < batch.size(); ++row) {
        // Fixed per-row draw order: timestep, then noise vector.
        const int t = 1 + int(rng_.uniform_int(std::uint64_t(t_max)));
        const Vec eps = rng_.normal_vec(batch.z[row].size());
        const Vec z_tk = forward_sample(batch.z[row], t + k, eps, sched_);
        loss_sum += lcd_loss(z_tk, t, batch.cond[row], &grads);
    }

    const double inv_b = 1.0 / double(batch.size());
    for (auto& g : grads) {
        for (double& v : g.data) v *= inv_b;
    }
    const double loss = loss_sum * inv_b;
    if (!std::isfinite(loss)) {
        throw DivergenceError("lcd: non-finite loss at step " + std::to_string(step_));
    }
    cfg_.optimizer.apply(student_.params(), grads);
    ema_step();
    ++step_;
    return loss;
}

void LcdTrainer::ema_step() {
    ema_update(ema_.params(), student_.params(), cfg_.ema_rate);
}

double LcdTrainer::self_consistency_gap(const LatentBatch& probe, int chains,
                                        std::uint64_t seed) const {
    if (probe.size() == 0) throw ConfigError("lcd: empty probe batch");
    if (chains < 1) throw ConfigError("lcd: need at least one probe chain");

    const int k = cfg_.skip;
    const int dim = student_.config().latent_dim;
    const EpsFn student_eps = eps_from_model(student_);
    Rng rng(seed);

    double gap_sum = 0.0;
    std::size_t pairs = 0;
    for (int chain = 0; chain < chains; ++chain) {
        const Condition& c = probe.cond[chain % probe.size()];
        Vec z = rng.normal_vec(std::size_t(dim));
        int t = sched_.steps();
        Vec f_here = consistency_fn(student_eps, z, t, c, sched_, cfg_.shape);
        while (t - k >= 1) {
            // Walk the teacher's deterministic trajectory; the student map
            // should be constant along it.
            const Vec z_next = guided_target(teacher_, z, t, t - k, c, cfg_.guidance, sched_);
            const Vec f_next =
                consistency_fn(student_eps, z_next, t - k, c, sched_, cfg_.shape);
            double sq = 0.0;
            for (int i = 0; i < dim; ++i) {
                const double d = f_here[i] - f_next[i];
                sq += d * d;
            }
            gap_sum += std::sqrt(sq / double(dim));
            ++pairs;
            z = z_next;
            t -= k;
            f_here = f_next;
        }
    }
    return gap_sum / double(pairs);
}

}  // namespace latentcd
