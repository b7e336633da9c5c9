#include <cmath>
#include <limits>

#include <doctest.h>

#include "latentcd/diffusion.hpp"
#include "latentcd/errors.hpp"

using namespace latentcd;

namespace {

NoiseSchedule default_schedule() { return NoiseSchedule::linear(100, 1e-4, 0.06); }

DenoiserConfig small_config(int dim) {
    DenoiserConfig cfg;
    cfg.latent_dim = dim;
    cfg.content_dim = 2;
    cfg.speaker_dim = 2;
    cfg.f0_embed_dim = 2;
    cfg.t_sin_dim = 4;
    cfg.t_feat_dim = 4;
    cfg.width = 16;
    cfg.depth = 2;
    cfg.schedule_steps = 100;
    return cfg;
}

}  // namespace

TEST_CASE("forward noising interpolates between data and noise") {
    const auto s = default_schedule();
    const Vec z0 = {1.0, -2.0};
    const Vec eps = {0.5, 0.5};
    CHECK(forward_sample(z0, 0, eps, s) == z0);
    const auto c = s.coeffs_at(60);
    const Vec zt = forward_sample(z0, 60, eps, s);
    CHECK(zt[0] == doctest::Approx(c.alpha_hat * 1.0 + c.sigma_hat * 0.5).epsilon(1e-15));
    CHECK(zt[1] == doctest::Approx(-c.alpha_hat * 2.0 + c.sigma_hat * 0.5).epsilon(1e-15));
    CHECK_THROWS_AS(forward_sample(z0, 10, {0.5}, s), std::invalid_argument);
}

TEST_CASE("noise-space loss and gradient") {
    const Vec pred = {1.0, 2.0};
    const Vec target = {0.0, 0.0};
    Vec grad;
    CHECK(noise_mse(pred, target, &grad) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(grad[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(grad[1] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(noise_mse(pred, pred) == 0.0);
    CHECK_THROWS_AS(noise_mse(pred, {1.0}), std::invalid_argument);
}

TEST_CASE("teacher training validates the batch") {
    const auto s = default_schedule();
    TeacherConfig tc;
    TeacherTrainer trainer(DenoiserModel::init(small_config(2), 3), tc, 7);

    LatentBatch empty;
    empty.dim = 2;
    CHECK_THROWS_AS(trainer.train_step(empty, s), ConfigError);

    const auto spec = DataSpec::gaussian({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 2, 2, 5);
    const auto bad = sample_dataset(spec, 4, 1);
    CHECK_THROWS_AS(trainer.train_step(bad, s), ConfigError);

    const auto spec2 = DataSpec::gaussian({0.0, 0.0}, {1.0, 1.0}, 2, 2, 5);
    const auto good = sample_dataset(spec2, 4, 1);
    const auto short_s = NoiseSchedule::linear(50, 1e-4, 0.06);
    CHECK_THROWS_AS(trainer.train_step(good, short_s), ConfigError);
    CHECK_NOTHROW(trainer.train_step(good, s));
    CHECK(trainer.step() == 1);

    CHECK_THROWS_AS(TeacherTrainer(DenoiserModel::init(small_config(2), 3),
                                   TeacherConfig{1.5, {}}, 7),
                    ConfigError);
}

TEST_CASE("a short training run reduces the noise loss") {
    const auto s = default_schedule();
    const auto spec = DataSpec::gaussian({0.0, 0.0}, {1.0, 1.0}, 2, 2, 5);
    const auto batch = sample_dataset(spec, 64, 1);
    TeacherConfig tc;
    tc.optimizer.kind = OptimizerKind::Adam;
    tc.optimizer.lr = 1e-3;
    TeacherTrainer trainer(DenoiserModel::init(small_config(2), 3), tc, 7);
    const double first = trainer.train_step(batch, s);
    double last = first;
    for (int i = 0; i < 200; ++i) last = trainer.train_step(batch, s);
    CHECK(last < first);
}

TEST_CASE("poisoned weights raise a divergence error") {
    const auto s = default_schedule();
    const auto spec = DataSpec::gaussian({0.0, 0.0}, {1.0, 1.0}, 2, 2, 5);
    const auto batch = sample_dataset(spec, 4, 1);
    DenoiserModel m = DenoiserModel::init(small_config(2), 3);
    m.params()[0].data[0] = std::numeric_limits<double>::quiet_NaN();
    TeacherTrainer trainer(std::move(m), TeacherConfig{}, 7);
    CHECK_THROWS_AS(trainer.train_step(batch, s), DivergenceError);
}

TEST_CASE("the final reverse step ignores injected noise") {
    const auto s = default_schedule();
    const GaussianOracle o{{0.0, 0.0}, {1.0, 1.0}};
    const EpsFn eps = eps_from_oracle(o, s);
    const Condition c = Condition::null_condition();
    const Vec z = {0.4, -0.9};
    const Vec a = ancestral_step(eps, z, 1, c, s, {10.0, 10.0});
    const Vec b = ancestral_step(eps, z, 1, c, s, {-10.0, -10.0});
    CHECK(a == b);
    // Earlier steps do inject noise.
    const Vec u = ancestral_step(eps, z, 50, c, s, {1.0, 1.0});
    const Vec v = ancestral_step(eps, z, 50, c, s, {0.0, 0.0});
    CHECK(u != v);
    CHECK_THROWS_AS(ancestral_step(eps, z, 0, c, s, {0.0, 0.0}), std::out_of_range);
    CHECK_THROWS_AS(ancestral_step(eps, z, 101, c, s, {0.0, 0.0}), std::out_of_range);
    CHECK_THROWS_AS(ancestral_step(eps, z, 5, c, s, {0.0}), std::invalid_argument);
}

TEST_CASE("reverse chain with the exact predictor preserves standard moments") {
    const auto s = default_schedule();
    const GaussianOracle o{{0.0, 0.0, 0.0, 0.0}, {1.0, 1.0, 1.0, 1.0}};
    const EpsFn eps = eps_from_oracle(o, s);
    const Condition c = Condition::null_condition();
    const int n = 4000, dim = 4;
    Rng rng(31);
    Vec mean(dim, 0.0), second(dim, 0.0);
    for (int i = 0; i < n; ++i) {
        const Vec z = ancestral_sample(eps, c, s, dim, rng);
        for (int j = 0; j < dim; ++j) {
            mean[j] += z[j];
            second[j] += z[j] * z[j];
        }
    }
    for (int j = 0; j < dim; ++j) {
        mean[j] /= double(n);
        const double var = second[j] / double(n) - mean[j] * mean[j];
        CHECK(std::fabs(mean[j]) < 0.08);
        CHECK(std::fabs(var - 1.0) < 0.08);
    }
}

TEST_CASE("seeded sampling is reproducible") {
    const auto s = default_schedule();
    const GaussianOracle o{{0.5}, {2.0}};
    const EpsFn eps = eps_from_oracle(o, s);
    const Condition c = Condition::null_condition();
    const Vec a = ancestral_sample(eps, c, s, 1, 777);
    const Vec b = ancestral_sample(eps, c, s, 1, 777);
    const Vec d = ancestral_sample(eps, c, s, 1, 778);
    CHECK(a == b);
    CHECK(a != d);
}
