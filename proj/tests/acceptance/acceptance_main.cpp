// Acceptance gate: ten end-to-end checks of the distillation engine against
// closed-form oracles, printed as one PASS/FAIL line each. Exit code is the
// number of failed checks capped at 1, so the harness sees a single verdict.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "latentcd/bench.hpp"
#include "latentcd/checkpoint.hpp"
#include "latentcd/diffusion.hpp"
#include "latentcd/experiment.hpp"
#include "latentcd/lcm.hpp"
#include "latentcd/metrics.hpp"

namespace {

using namespace latentcd;
namespace fs = std::filesystem;

// ---- pinned tolerances and workloads -------------------------------------
constexpr double kTolScheduleRel = 1e-12;   // product-oracle agreement per step
constexpr double kTolVpIdentity = 1e-12;    // alpha_hat^2 + sigma_hat^2 - 1
constexpr int kGradConfigs = 22;            // random architectures checked
constexpr double kTolGradRel = 1e-4;        // worst FD relative error
constexpr long long kTeacherIters = 20000;  // teacher training steps
constexpr double kTolEpsMsd = 1e-2;         // mean squared noise-prediction gap
constexpr int kAncestralSamples = 12000;    // reverse-chain sample count
constexpr double kTolTeacherMean = 0.05;    // per-coordinate sample-mean bound
constexpr double kTolTeacherVar = 0.05;     // per-coordinate variance, relative
constexpr double kTolSolverK1 = 1e-2;       // stride-1 endpoint error, relative
constexpr double kTolGuidedAffine = 1e-12;  // guidance affinity, relative
constexpr long long kDistillIters = 4000;   // final distillation-phase steps
constexpr double kTolGap = 5e-2;            // final self-consistency gap
constexpr double kTolOneStepMoments = 0.10; // one-step mean RMS / std error
constexpr int kTrendSeeds = 8;              // sampling seeds averaged in the trend
constexpr int kTrendSamples = 2048;         // samples per seed and component
constexpr double kConvertNearer = 0.90;     // fraction landing nearer the target
constexpr double kTolIdentityMean = 0.25;   // two-sample mean-gap bound
constexpr double kTolIdentityVar = 0.35;    // two-sample variance-ratio bound
constexpr double kLatencyRatio = 50.0;      // teacher-100 / lcm-1 median floor

struct Gate {
    int fails = 0;
    void line(const char* name, bool ok, const std::string& detail) {
        std::printf("%s %s (%s)\n", ok ? "PASS" : "FAIL", name, detail.c_str());
        std::fflush(stdout);
        if (!ok) ++fails;
    }
};

template <typename F>
void guard(Gate& gate, const char* name, F&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        gate.line(name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return std::string(buf);
}

NoiseSchedule default_schedule() { return NoiseSchedule::linear(100, 1e-4, 0.06); }

double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

LatentBatch slice(const LatentBatch& data, long long iter, int batch) {
    LatentBatch b;
    b.dim = data.dim;
    const std::size_t n = data.size();
    const std::size_t start = std::size_t((iter * batch) % (long long)n);
    for (int i = 0; i < batch; ++i) {
        const std::size_t row = (start + i) % n;
        b.z.push_back(data.z[row]);
        b.cond.push_back(data.cond[row]);
        b.component.push_back(data.component[row]);
    }
    return b;
}

// Held-out condition: fresh content paired with a component's singer profile,
// exactly how the sampling pipeline conditions generation. Evaluating on
// conditions outside the training set keeps dataset memorization from leaking
// into the sampled moments.
Condition fresh_condition(const DataSpec& spec, std::size_t component, Rng& rng) {
    Condition c;
    c.content = rng.normal_vec(std::size_t(spec.content_dim));
    c.f0_bins = quantize_log_f0(spec.components[component].singer.f0);
    c.speaker = spec.components[component].singer.speaker;
    return c;
}

// ---- 1: schedule fidelity -------------------------------------------------

void check_schedule(Gate& gate) {
    const auto s = default_schedule();
    const bool endpoints = s.beta(1) == 1e-4 && s.beta(100) == 0.06;

    long double prod = 1.0L;
    double worst_rel = 0.0, worst_vp = 0.0;
    for (int t = 1; t <= 100; ++t) {
        const long double beta =
            1e-4L + (0.06L - 1e-4L) * (long double)(t - 1) / 99.0L;
        prod *= (1.0L - beta);
        worst_rel = std::max(
            worst_rel, std::fabs(double((s.alpha_bar(t) - prod) / prod)));
        const double vp =
            s.alpha_hat(t) * s.alpha_hat(t) + s.sigma_hat(t) * s.sigma_hat(t) - 1.0;
        worst_vp = std::max(worst_vp, std::fabs(vp));
    }
    const double frozen = 0.04654703359380519865186;
    const double frozen_rel = std::fabs((s.alpha_bar(100) - frozen) / frozen);

    const bool ok = endpoints && worst_rel < kTolScheduleRel &&
                    worst_vp < kTolVpIdentity && frozen_rel < kTolScheduleRel;
    gate.line("1 schedule-fidelity", ok,
              fmt("beta endpoints exact=%d, product-oracle rel<=%.2e, vp<=%.2e, "
                  "terminal rel=%.2e",
                  int(endpoints), worst_rel, worst_vp, frozen_rel));
}

// ---- 2: analytic gradients vs central differences -------------------------

void check_gradients(Gate& gate) {
    Rng rng(0xfd5eed);
    double worst = 0.0;
    for (int ci = 0; ci < kGradConfigs; ++ci) {
        DenoiserConfig dc;
        dc.latent_dim = 1 + int(rng.uniform_int(3));
        dc.content_dim = 1 + int(rng.uniform_int(2));
        dc.speaker_dim = 1 + int(rng.uniform_int(2));
        dc.f0_embed_dim = 1 + int(rng.uniform_int(2));
        dc.t_sin_dim = 2 + 2 * int(rng.uniform_int(2));
        dc.t_feat_dim = 1 + int(rng.uniform_int(2));
        dc.width = 3 + int(rng.uniform_int(3));
        dc.depth = 1 + int(rng.uniform_int(2));
        dc.schedule_steps = 50;
        DenoiserModel m = DenoiserModel::init(dc, 1000 + std::uint64_t(ci));
        for (auto& tensor : m.params()) {
            for (double& v : tensor.data) v = 0.3 * rng.normal();
        }
        Condition c;
        if (rng.uniform() < 0.3) {
            c = Condition::null_condition();
        } else {
            c.content = rng.normal_vec(std::size_t(dc.content_dim));
            c.f0_bins = {int(rng.uniform_int(256)), int(rng.uniform_int(256))};
            c.speaker = rng.normal_vec(std::size_t(dc.speaker_dim));
        }
        const int t = 1 + int(rng.uniform_int(50));
        const Vec z = rng.normal_vec(std::size_t(dc.latent_dim));
        const Vec w = rng.normal_vec(std::size_t(dc.latent_dim));

        EvalCache cache;
        m.eval(z, t, c, &cache);
        const TensorList grads = m.backward(cache, w);

        const double h = 1e-6;
        for (std::size_t ti = 0; ti < grads.size(); ++ti) {
            auto& tensor = m.params()[ti];
            const std::size_t n = tensor.data.size();
            const std::size_t stride = std::max<std::size_t>(1, n / 8);
            for (std::size_t j = 0; j < n; j += stride) {
                const double keep = tensor.data[j];
                tensor.data[j] = keep + h;
                const Vec yp = m.eval(z, t, c);
                tensor.data[j] = keep - h;
                const Vec ym = m.eval(z, t, c);
                tensor.data[j] = keep;
                double lp = 0.0, lm = 0.0;
                for (std::size_t d = 0; d < yp.size(); ++d) {
                    lp += w[d] * yp[d];
                    lm += w[d] * ym[d];
                }
                const double fd = (lp - lm) / (2.0 * h);
                const double an = grads[ti].data[j];
                const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
                worst = std::max(worst, std::fabs(fd - an) / denom);
            }
        }
    }
    gate.line("2 gradient-check", worst < kTolGradRel,
              fmt("%d configs, worst relative error %.3e", kGradConfigs, worst));
}

// ---- 3: trained teacher approaches the exact noise predictor --------------

void check_teacher(Gate& gate) {
    const auto s = default_schedule();
    const DataSpec spec =
        DataSpec::gaussian(Vec(8, 0.0), Vec(8, 1.0), 4, 8, 0x7357);
    const LatentBatch data = sample_dataset(spec, 8192, 2024);

    // Step-decayed optimization: a long exploratory phase, then two quieter
    // phases that settle the stochastic-gradient noise floor far enough for
    // the sampled-moment bounds below.
    TeacherConfig tc;
    tc.p_uncond = 0.1;
    tc.optimizer = make_optimizer("adam", 1e-3);
    TeacherTrainer trainer(DenoiserModel::init(DenoiserConfig{}, 17), tc, 4242);
    for (long long it = 0; it < kTeacherIters; ++it) {
        trainer.train_step(slice(data, it, 32), s);
    }
    TeacherConfig tc2 = tc;
    tc2.optimizer = make_optimizer("adam", 1e-4);
    TeacherTrainer trainer2(trainer.model(), tc2, 4243);
    for (long long it = 0; it < 6000; ++it) {
        trainer2.train_step(slice(data, kTeacherIters + it, 64), s);
    }
    TeacherConfig tc3 = tc;
    tc3.optimizer = make_optimizer("adam", 2e-5);
    TeacherTrainer trainer3(trainer2.model(), tc3, 4244);
    for (long long it = 0; it < 4000; ++it) {
        trainer3.train_step(slice(data, kTeacherIters + 6000 + it, 64), s);
    }
    const DenoiserModel& m = trainer3.model();

    // Mean squared gap to the exact predictor, Monte Carlo over the marginal
    // at every step, under held-out conditions.
    const GaussianOracle o{Vec(8, 0.0), Vec(8, 1.0)};
    Rng rng(31337);
    double msd = 0.0;
    for (int t = 1; t <= 100; ++t) {
        double acc = 0.0;
        int cnt = 0;
        for (int d = 0; d < 48; ++d) {
            const Vec z0 = rng.normal_vec(8);
            const Vec e = rng.normal_vec(8);
            const Vec zt = forward_sample(z0, t, e, s);
            const Condition c = fresh_condition(spec, 0, rng);
            const Vec pred = m.eval(zt, t, c);
            const Vec star = oracle_eps(o, zt, t, s);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const double diff = pred[i] - star[i];
                acc += diff * diff;
                ++cnt;
            }
        }
        msd += acc / double(cnt) / 100.0;
    }

    // Full reverse-chain sampling: per-coordinate moments against N(0, I).
    const EpsFn eps = eps_from_model(m);
    Rng crng(0xC0D5);
    Vec mean(8, 0.0), sq(8, 0.0);
    for (int i = 0; i < kAncestralSamples; ++i) {
        const Condition c = fresh_condition(spec, 0, crng);
        const Vec z = ancestral_sample(eps, c, s, 8, 0x5a4000ull + std::uint64_t(i));
        for (int d = 0; d < 8; ++d) {
            mean[d] += z[d] / kAncestralSamples;
            sq[d] += z[d] * z[d] / kAncestralSamples;
        }
    }
    double worst_mean = 0.0, worst_var = 0.0;
    for (int d = 0; d < 8; ++d) {
        worst_mean = std::max(worst_mean, std::fabs(mean[d]));
        worst_var = std::max(worst_var, std::fabs(sq[d] - mean[d] * mean[d] - 1.0));
    }

    const bool ok = msd < kTolEpsMsd && worst_mean <= kTolTeacherMean &&
                    worst_var <= kTolTeacherVar;
    gate.line("3 teacher-optimality", ok,
              fmt("eps msd %.3e, worst |mean| %.3f, worst |var-1| %.3f over %d samples",
                  msd, worst_mean, worst_var, kAncestralSamples));
}

// ---- 4: solver transport matches the exact flow ---------------------------

void check_solver(Gate& gate) {
    const auto s = default_schedule();
    const Condition null_c = Condition::null_condition();

    auto chain_rel_err = [&](const GaussianOracle& o, const Vec& z0, int stride) {
        const EpsFn eps = eps_from_oracle(o, s);
        Vec cur = z0;
        int t = s.steps();
        while (t > 0) {
            const int to = std::max(0, t - stride);
            cur = ddim_step(eps, cur, t, to, null_c, s);
            t = to;
        }
        const Vec flow = oracle_flow(o, z0, s.steps(), 0, s);
        Vec diff(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) diff[i] = cur[i] - flow[i];
        return norm2(diff) / norm2(flow);
    };

    const GaussianOracle std2{{0.0, 0.0}, {1.0, 1.0}};
    const GaussianOracle off1{{1.5}, {4.0}};
    const double e1 =
        std::max(chain_rel_err(std2, {1.0, -0.7}, 1), chain_rel_err(off1, {1.0}, 1));
    const double e10 =
        std::max(chain_rel_err(std2, {1.0, -0.7}, 10), chain_rel_err(off1, {1.0}, 10));

    // Guidance: exactly affine in the weight, and the zero-weight target is
    // bitwise the conditional step.
    const EpsFn two_branch = [](const Vec& z, int, const Condition& c) {
        Vec out(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            out[i] = c.is_null ? 0.25 * z[i] : 0.5 * z[i] + 0.1;
        }
        return out;
    };
    Condition c;
    c.content = {1.0};
    c.f0_bins = {7};
    c.speaker = {0.0};
    const Vec z = {0.6, -1.2};
    const Vec step_c = ddim_step(two_branch, z, 80, 40, c, s);
    const Vec step_u = ddim_step(two_branch, z, 80, 40, null_c, s);
    double affine_err = 0.0;
    for (double w : {0.3, 1.0, 2.5}) {
        const Vec g = guided_target(two_branch, z, 80, 40, c, w, s);
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double want = (1.0 + w) * step_c[i] - w * step_u[i];
            affine_err = std::max(affine_err,
                                  std::fabs(g[i] - want) / std::max(1.0, std::fabs(want)));
        }
    }
    const bool collapse = guided_target(two_branch, z, 80, 40, c, 0.0, s) == step_c;

    const bool ok = e1 < kTolSolverK1 && e1 < e10 && affine_err < kTolGuidedAffine &&
                    collapse;
    gate.line("4 solver-transport", ok,
              fmt("stride-1 rel err %.3e, stride-10 %.3e, affinity err %.1e, "
                  "zero-guidance collapse=%d",
                  e1, e10, affine_err, int(collapse)));
}

// ---- 5: distilling the exact teacher converges ----------------------------

void check_distillation(Gate& gate) {
    const auto s = default_schedule();
    const DataSpec spec =
        DataSpec::gaussian(Vec(8, 0.0), Vec(8, 1.0), 4, 8, 0xABCD);
    const LatentBatch data = sample_dataset(spec, 2048, 77);
    const EpsFn teacher =
        eps_from_oracle(GaussianOracle{Vec(8, 0.0), Vec(8, 1.0)}, s);

    // Boundary-pinned consistency shape: a small time scale keeps the skip
    // weight near one across the band the distillation loss never trains as a
    // student input (t <= skip), so the map's behavior there is set by
    // construction instead of floating on network extrapolation. One-jump
    // sampling telescopes through that band, which bounds its moments.
    LcdConfig lc;  // mu 0.95, guidance 0.3, skip 10
    lc.shape = ConsistencyShape{0.5, 0.0025};
    // Staged learning rate: the later low-lr phases remove the optimizer's
    // stationary noise so the map converges to the distillation fixed point.
    lc.optimizer = make_optimizer("adam", 1e-3);
    LcdTrainer phase1(DenoiserModel::init(DenoiserConfig{}, 23), teacher, lc, s, 31415);
    for (long long it = 0; it < 4000; ++it) phase1.distill_step(slice(data, it, 32));
    LcdConfig lc2 = lc;
    lc2.optimizer = make_optimizer("adam", 2e-4);
    LcdTrainer phase2(phase1.student(), teacher, lc2, s, 31416);
    for (long long it = 0; it < 4000; ++it) {
        phase2.distill_step(slice(data, 4000 + it, 64));
    }
    LcdConfig lc3 = lc;
    lc3.optimizer = make_optimizer("adam", 4e-5);
    LcdTrainer trainer(phase2.student(), teacher, lc3, s, 31417);
    for (long long it = 0; it < kDistillIters; ++it) {
        trainer.distill_step(slice(data, 8000 + it, 64));
    }
    const double gap = trainer.self_consistency_gap(slice(data, 0, 16));

    // Single-jump sampling from the student weights: moments against N(0, I),
    // under held-out conditions.
    const ConsistencyMap f =
        consistency_from_eps(eps_from_model(trainer.student()), s, lc.shape);
    Rng crng(0xF00D);
    const int n = 4000;
    Vec mean(8, 0.0), sq(8, 0.0);
    for (int i = 0; i < n; ++i) {
        const Condition c = fresh_condition(spec, 0, crng);
        const Vec z = lcm_sample(f, c, {}, s, 8, 0xE3A000ull + std::uint64_t(i));
        for (int d = 0; d < 8; ++d) {
            mean[d] += z[d] / n;
            sq[d] += z[d] * z[d] / n;
        }
    }
    double mean_rms = 0.0, worst_std = 0.0;
    for (int d = 0; d < 8; ++d) {
        mean_rms += mean[d] * mean[d] / 8.0;
        const double sd = std::sqrt(std::max(0.0, sq[d] - mean[d] * mean[d]));
        worst_std = std::max(worst_std, std::fabs(sd - 1.0));
    }
    mean_rms = std::sqrt(mean_rms);

    const bool ok =
        gap < kTolGap && mean_rms < kTolOneStepMoments && worst_std < kTolOneStepMoments;
    gate.line("5 distillation-convergence", ok,
              fmt("gap %.4f, one-step mean rms %.3f, worst |std-1| %.3f", gap,
                  mean_rms, worst_std));
}

// ---- 6 and 7 share one trained mixture pipeline ---------------------------

struct MixturePipeline {
    bool ok = false;
    std::string err;
    ConsistencyShape shape;
    DataSpec spec;
    std::optional<DenoiserModel> model;  // distilled student weights
};

MixturePipeline build_mixture_pipeline() {
    MixturePipeline p;
    try {
        const auto s = default_schedule();
        p.spec = DataSpec::mixture({Vec(8, -2.0), Vec(8, 2.0)},
                                   {Vec(8, 1.0), Vec(8, 1.0)}, 4, 8, 0x51c9);
        const LatentBatch data = sample_dataset(p.spec, 4096, 555);

        TeacherConfig tc;
        tc.p_uncond = 0.1;
        tc.optimizer = make_optimizer("adam", 1e-3);
        TeacherTrainer teacher_tr(DenoiserModel::init(DenoiserConfig{}, 29), tc, 888);
        for (long long it = 0; it < kTeacherIters; ++it) {
            teacher_tr.train_step(slice(data, it, 32), s);
        }
        const DenoiserModel teacher = teacher_tr.model();

        LcdConfig lc;
        lc.shape = ConsistencyShape{0.5, 0.0025};
        p.shape = lc.shape;
        lc.optimizer = make_optimizer("adam", 1e-3);
        LcdTrainer lcd(teacher, eps_from_model(teacher), lc, s, 999);
        for (long long it = 0; it < 4000; ++it) {
            lcd.distill_step(slice(data, it, 32));
        }
        LcdConfig lc2 = lc;
        lc2.optimizer = make_optimizer("adam", 2e-4);
        LcdTrainer lcd2(lcd.student(), eps_from_model(teacher), lc2, s, 1000);
        for (long long it = 0; it < 3000; ++it) {
            lcd2.distill_step(slice(data, 4000 + it, 64));
        }
        p.model.emplace(lcd2.student());
        p.ok = true;
    } catch (const std::exception& e) {
        p.err = e.what();
    }
    return p;
}

// Per-component moment error of few-step samples: || mean gap ||_2 plus the
// Frobenius gap of the full covariance, averaged over components.
double trend_error(const MixturePipeline& p, const ConsistencyMap& f, int n_steps,
                   std::uint64_t seed) {
    const auto s = default_schedule();
    const auto taus = make_tau_sequence(n_steps, s.steps());
    Rng rng(seed);
    double err = 0.0;
    for (std::size_t k = 0; k < p.spec.components.size(); ++k) {
        const auto& comp = p.spec.components[k];
        const std::vector<int> f0_bins = quantize_log_f0(comp.singer.f0);
        Vec mean(8, 0.0);
        std::vector<Vec> rows;
        rows.reserve(kTrendSamples);
        for (int i = 0; i < kTrendSamples; ++i) {
            Condition c;
            c.content = rng.normal_vec(4);
            c.f0_bins = f0_bins;
            c.speaker = comp.singer.speaker;
            rows.push_back(lcm_sample(f, c, taus, s, 8, rng));
            for (int d = 0; d < 8; ++d) mean[d] += rows.back()[d] / kTrendSamples;
        }
        double m_err = 0.0;
        for (int d = 0; d < 8; ++d) {
            m_err += (mean[d] - comp.mean[d]) * (mean[d] - comp.mean[d]);
        }
        double c_err = 0.0;
        for (int a = 0; a < 8; ++a) {
            for (int b = 0; b < 8; ++b) {
                double cov = 0.0;
                for (const auto& r : rows) {
                    cov += (r[a] - mean[a]) * (r[b] - mean[b]) / kTrendSamples;
                }
                const double want = a == b ? comp.var[std::size_t(a)] : 0.0;
                c_err += (cov - want) * (cov - want);
            }
        }
        err += (std::sqrt(m_err) + std::sqrt(c_err)) / double(p.spec.components.size());
    }
    return err;
}

void check_trend(Gate& gate, const MixturePipeline& p) {
    if (!p.ok) throw std::runtime_error("mixture pipeline failed: " + p.err);
    const auto s = default_schedule();
    const ConsistencyMap f = consistency_from_eps(eps_from_model(*p.model), s, p.shape);
    double e1 = 0.0, e2 = 0.0, e4 = 0.0;
    for (int i = 0; i < kTrendSeeds; ++i) {
        const std::uint64_t seed = 7000 + std::uint64_t(i);
        e1 += trend_error(p, f, 1, seed) / kTrendSeeds;
        e2 += trend_error(p, f, 2, seed) / kTrendSeeds;
        e4 += trend_error(p, f, 4, seed) / kTrendSeeds;
    }
    const bool ok = e4 <= e2 && e2 <= e1;
    gate.line("6 multi-step-trend", ok,
              fmt("moment error by steps: 1 -> %.3f, 2 -> %.3f, 4 -> %.3f "
                  "(%d seeds x %d samples)",
                  e1, e2, e4, kTrendSeeds, kTrendSamples));
}

void check_conversion(Gate& gate, const MixturePipeline& p) {
    if (!p.ok) throw std::runtime_error("mixture pipeline failed: " + p.err);
    const auto s = default_schedule();
    const ConsistencyMap f = consistency_from_eps(eps_from_model(*p.model), s, p.shape);
    const auto& a = p.spec.components[0];
    const auto& b = p.spec.components[1];
    const auto taus = make_tau_sequence(4, s.steps());

    // Source content and pitch, target speaker and pitch level: samples should
    // land in the target's component.
    Rng crng(0xC0117);
    int nearer = 0;
    const int n_conv = 500;
    for (int i = 0; i < n_conv; ++i) {
        const Vec content = crng.normal_vec(4);
        const Vec z = convert(f, content, a.singer.f0, voiced_mean(b.singer.f0),
                              b.singer.speaker, taus, s, 8, 90000 + std::uint64_t(i));
        double da = 0.0, db = 0.0;
        for (int d = 0; d < 8; ++d) {
            da += (z[d] - a.mean[d]) * (z[d] - a.mean[d]);
            db += (z[d] - b.mean[d]) * (z[d] - b.mean[d]);
        }
        if (db < da) ++nearer;
    }
    const double frac = double(nearer) / n_conv;

    // Identity conversion (own speaker, unshifted pitch) against plain
    // reconstruction: same conditions, disjoint sampling seeds, so the two
    // groups must agree in distribution.
    const int n_id = 1000;
    Rng irng(0x1DF0);
    Vec m1(8, 0.0), m2(8, 0.0), s1(8, 0.0), s2(8, 0.0);
    const std::vector<int> a_bins = quantize_log_f0(a.singer.f0);
    for (int i = 0; i < n_id; ++i) {
        const Vec content = irng.normal_vec(4);
        const Vec z1 = convert(f, content, a.singer.f0, voiced_mean(a.singer.f0),
                               a.singer.speaker, taus, s, 8, 100000 + std::uint64_t(i));
        Condition c;
        c.content = content;
        c.f0_bins = a_bins;
        c.speaker = a.singer.speaker;
        const Vec z2 = lcm_sample(f, c, taus, s, 8, 200000 + std::uint64_t(i));
        for (int d = 0; d < 8; ++d) {
            m1[d] += z1[d] / n_id;
            m2[d] += z2[d] / n_id;
            s1[d] += z1[d] * z1[d] / n_id;
            s2[d] += z2[d] * z2[d] / n_id;
        }
    }
    double mean_gap = 0.0, worst_ratio = 0.0;
    for (int d = 0; d < 8; ++d) {
        mean_gap += (m1[d] - m2[d]) * (m1[d] - m2[d]);
        const double v1 = s1[d] - m1[d] * m1[d];
        const double v2 = s2[d] - m2[d] * m2[d];
        worst_ratio = std::max(worst_ratio, std::fabs(v1 / v2 - 1.0));
    }
    mean_gap = std::sqrt(mean_gap);

    const bool ok = frac >= kConvertNearer && mean_gap <= kTolIdentityMean &&
                    worst_ratio <= kTolIdentityVar;
    gate.line("7 conversion", ok,
              fmt("%.1f%% nearer target mean; identity-vs-reconstruction mean gap "
                  "%.3f, worst var ratio dev %.3f",
                  100.0 * frac, mean_gap, worst_ratio));
}

// ---- 8: sampler latency ---------------------------------------------------

void check_latency(Gate& gate) {
    const auto s = default_schedule();
    const DenoiserModel m = DenoiserModel::init(DenoiserConfig{}, 5);
    Rng rng(66);
    Condition c;
    c.content = rng.normal_vec(4);
    c.f0_bins = {100, 120};
    c.speaker = rng.normal_vec(8);
    BenchOptions opts;
    opts.trials = 7;
    opts.warmups = 2;
    opts.samples = 16;

    const auto teacher = bench_sampler(m, "teacher-100", c, s, {}, opts);
    const auto lcm1 = bench_sampler(m, "lcm-1", c, s, {}, opts);
    const auto lcm2 = bench_sampler(m, "lcm-2", c, s, {}, opts);
    const auto lcm4 = bench_sampler(m, "lcm-4", c, s, {}, opts);

    const bool counts = teacher.steps_per_sample == 100 && lcm1.steps_per_sample == 1 &&
                        lcm2.steps_per_sample == 2 && lcm4.steps_per_sample == 4;
    const bool ordering = teacher.wall_ns_median > lcm4.wall_ns_median &&
                          lcm4.wall_ns_median > lcm2.wall_ns_median &&
                          lcm2.wall_ns_median > lcm1.wall_ns_median;
    const double ratio =
        double(teacher.wall_ns_median) / double(std::max(1ll, lcm1.wall_ns_median));
    const bool ok = counts && ordering && ratio >= kLatencyRatio;
    gate.line("8 latency", ok,
              fmt("calls 100/%d/%d/%d, medians %lld/%lld/%lld/%lld ns, ratio %.0fx",
                  lcm1.steps_per_sample, lcm2.steps_per_sample, lcm4.steps_per_sample,
                  teacher.wall_ns_median, lcm4.wall_ns_median, lcm2.wall_ns_median,
                  lcm1.wall_ns_median, ratio));
}

// ---- 9: pitch pipeline ----------------------------------------------------

void check_f0(Gate& gate) {
    // Exact ratio shift on a hand-built contour (ratio 2 is a power of two, so
    // every product is exact in binary floating point).
    const F0Contour src{{0.0, 100.0, 200.0}};
    const F0Contour shifted = shift_f0(src, 300.0);
    const bool shift_exact =
        shifted.hz == std::vector<double>{0.0, 200.0, 400.0};

    const bool edges = quantize_log_f0_value(50.0) == 1 &&
                       quantize_log_f0_value(1100.0) == 255 &&
                       quantize_log_f0_value(10.0) == 1 &&
                       quantize_log_f0_value(5000.0) == 255;
    const double geo = std::sqrt(50.0 * 1100.0);
    const bool center = quantize_log_f0_value(geo) == 128;

    bool monotone = true, budget = true;
    int prev = 0;
    for (double hz = 45.0; hz < 1250.0; hz *= 1.01) {
        const int bin = quantize_log_f0_value(hz);
        if (bin < prev) monotone = false;
        if (bin < 1 || bin > 255) budget = false;
        prev = bin;
    }

    const auto bins = quantize_log_f0(F0Contour{{0.0, 440.0, 0.0, 50.0}});
    bool unvoiced_zero = bins.size() == 4;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const bool voiced_frame = i == 1 || i == 3;
        unvoiced_zero = unvoiced_zero && ((bins[i] == 0) != voiced_frame);
    }

    const bool ok = shift_exact && edges && center && monotone && budget && unvoiced_zero;
    gate.line("9 f0-pipeline", ok,
              fmt("shift exact=%d, edge bins=%d, center bin=%d, monotone=%d, "
                  "in budget=%d, unvoiced<->bin0=%d",
                  int(shift_exact), int(edges), int(center), int(monotone), int(budget),
                  int(unvoiced_zero)));
}

// ---- 10: byte-for-byte reproducibility through the command line -----------

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LATENTCD_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

std::string drop_last_column(const std::string& csv) {
    std::string out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.rfind(',');
        out += pos == std::string::npos ? line : line.substr(0, pos);
        out += '\n';
    }
    return out;
}

std::string timing_free_bench(const std::string& csv) {
    std::string out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::string tok;
        std::istringstream ls(line);
        while (std::getline(ls, tok, ',')) f.push_back(tok);
        if (f.size() == 9) {
            out += f[0] + ',' + f[1] + ',' + f[5] + ',' + f[6] + ',' + f[7] + ',' + f[8];
        } else {
            out += line;
        }
        out += '\n';
    }
    return out;
}

void check_reproducibility(Gate& gate) {
    const fs::path root =
        fs::temp_directory_path() /
        ("latentcd_accept_" +
         std::to_string(std::uintmax_t(
             std::chrono::steady_clock::now().time_since_epoch().count())));
    fs::create_directories(root);
    const fs::path cfg = root / "exp.cfg";
    write_text_atomic(cfg,
                      "data.kind = mixture\n"
                      "data.dim = 2\n"
                      "data.n = 512\n"
                      "data.components = 2\n"
                      "data.separation = 2\n"
                      "data.content_dim = 2\n"
                      "data.speaker_dim = 2\n"
                      "model.width = 32\n"
                      "model.depth = 1\n"
                      "model.f0_embed_dim = 2\n"
                      "model.t_sin_dim = 4\n"
                      "model.t_feat_dim = 2\n"
                      "teacher.iters = 300\n"
                      "teacher.batch = 16\n"
                      "teacher.lr = 0.001\n"
                      "teacher.optimizer = adam\n"
                      "lcd.iters = 150\n"
                      "lcd.batch = 16\n"
                      "lcd.lr = 0.001\n"
                      "lcd.optimizer = adam\n"
                      "bench.trials = 5\n"
                      "bench.warmups = 0\n"
                      "bench.samples = 4\n"
                      "run.seed = 777\n");

    for (const char* run : {"r1", "r2"}) {
        const std::string out = (root / run).string();
        const std::string base = " --config " + cfg.string() + " --out " + out;
        if (run_cli("train-teacher" + base) != 0 ||
            run_cli("distill" + base + " --checkpoint " + out + "/teacher.ckpt") != 0 ||
            run_cli("sample" + base + " --checkpoint " + out +
                    "/student.ckpt --steps 2 --samples 64") != 0 ||
            run_cli("eval" + base + " --samples " + out + "/samples.bin") != 0 ||
            run_cli("bench" + base + " --checkpoint " + out +
                    "/student.ckpt --methods teacher-100,lcm-1,lcm-2") != 0) {
            throw std::runtime_error("pipeline command failed in " + out);
        }
    }

    std::string bad;
    auto check_same = [&](const char* name, auto transform) {
        const std::string t1 = transform(read_text(root / "r1" / name));
        const std::string t2 = transform(read_text(root / "r2" / name));
        if (t1 != t2) bad += std::string(bad.empty() ? "" : ",") + name;
    };
    auto id = [](std::string s) { return s; };
    for (const char* name :
         {"teacher.ckpt", "teacher_meta.json", "student.ckpt", "student_ema.ckpt",
          "distill_meta.json", "samples.bin", "samples_meta.json", "eval_report.csv"}) {
        check_same(name, id);
    }
    check_same("teacher_metrics.csv", drop_last_column);
    check_same("lcd_metrics.csv", drop_last_column);
    check_same("bench.csv", timing_free_bench);

    const bool hashes = checkpoint_content_hash(root / "r1" / "teacher.ckpt") ==
                        checkpoint_content_hash(root / "r2" / "teacher.ckpt");
    if (!hashes) bad += std::string(bad.empty() ? "" : ",") + "teacher.ckpt hash";

    std::error_code ec;
    fs::remove_all(root, ec);

    gate.line("10 reproducibility", bad.empty(),
              bad.empty() ? "all outputs byte-identical across reruns; "
                            "timing columns excluded by design"
                          : "mismatched: " + bad);
}

}  // namespace

int main() {
    Gate gate;
    guard(gate, "1 schedule-fidelity", [&] { check_schedule(gate); });
    guard(gate, "2 gradient-check", [&] { check_gradients(gate); });
    guard(gate, "3 teacher-optimality", [&] { check_teacher(gate); });
    guard(gate, "4 solver-transport", [&] { check_solver(gate); });
    guard(gate, "5 distillation-convergence", [&] { check_distillation(gate); });
    const MixturePipeline pipeline = build_mixture_pipeline();
    guard(gate, "6 multi-step-trend", [&] { check_trend(gate, pipeline); });
    guard(gate, "7 conversion", [&] { check_conversion(gate, pipeline); });
    guard(gate, "8 latency", [&] { check_latency(gate); });
    guard(gate, "9 f0-pipeline", [&] { check_f0(gate); });
    guard(gate, "10 reproducibility", [&] { check_reproducibility(gate); });
    std::printf("%d/10 criteria passed\n", 10 - gate.fails);
    return gate.fails == 0 ? 0 : 1;
}
