#include <cmath>
#include <memory>

#include <doctest.h>

#include "latentcd/diffusion.hpp"
#include "latentcd/errors.hpp"
#include "latentcd/lcd.hpp"

using namespace latentcd;

namespace {

NoiseSchedule default_schedule() { return NoiseSchedule::linear(100, 1e-4, 0.06); }

DenoiserConfig small_config() {
    DenoiserConfig cfg;
    cfg.latent_dim = 2;
    cfg.content_dim = 2;
    cfg.speaker_dim = 2;
    cfg.f0_embed_dim = 2;
    cfg.t_sin_dim = 2;
    cfg.t_feat_dim = 2;
    cfg.width = 8;
    cfg.depth = 1;
    cfg.schedule_steps = 100;
    return cfg;
}

DataSpec small_spec() {
    return DataSpec::gaussian({0.0, 0.0}, {1.0, 1.0}, 2, 2, 99);
}

LcdTrainer make_trainer(double lr = 1e-3, OptimizerKind kind = OptimizerKind::Adam) {
    const auto s = default_schedule();
    LcdConfig cfg;
    cfg.optimizer.kind = kind;
    cfg.optimizer.lr = lr;
    return LcdTrainer(DenoiserModel::init(small_config(), 11),
                      eps_from_oracle(GaussianOracle{{0.0, 0.0}, {1.0, 1.0}}, s), cfg, s,
                      1234);
}

}  // namespace

TEST_CASE("boundary weights pin the identity at step zero and vanish later") {
    CHECK(c_skip(0) == 1.0);
    CHECK(c_out(0) == 0.0);
    CHECK(c_skip(100) < 0.01);
    CHECK(c_out(100) > 0.99);
    double prev = c_skip(0);
    for (int t = 1; t <= 100; ++t) {
        const double cur = c_skip(t);
        CHECK(cur < prev);
        CHECK(c_out(t) > c_out(t - 1));
        prev = cur;
    }
    CHECK_THROWS_AS(c_skip(-1), std::out_of_range);
    CHECK_THROWS_AS(c_out(-1), std::out_of_range);
    CHECK_THROWS_AS(c_skip(1, ConsistencyShape{0.0, 10.0}), ConfigError);
    CHECK_THROWS_AS(c_out(1, ConsistencyShape{0.5, -1.0}), ConfigError);
}

TEST_CASE("the consistency map is the identity at step zero without a predictor call") {
    const auto s = default_schedule();
    auto calls = std::make_shared<std::size_t>(0);
    const EpsFn eps =
        counted_eps(eps_from_oracle(GaussianOracle{{0.0}, {1.0}}, s), calls);
    const Vec z = {1.7};
    const Vec out = consistency_fn(eps, z, 0, Condition::null_condition(), s);
    CHECK(out == z);
    CHECK(*calls == 0);
}

TEST_CASE("with the exact predictor the map scales standard-normal inputs in closed form") {
    const auto s = default_schedule();
    const EpsFn eps = eps_from_oracle(GaussianOracle{{0.0, 0.0}, {1.0, 1.0}}, s);
    const Condition c = Condition::null_condition();
    const Vec z = {0.9, -2.0};
    for (int t : {1, 10, 55, 100}) {
        // eps* = sigma_hat z, so z0_hat = alpha_hat z and
        // F(z) = (c_skip + c_out alpha_hat) z per coordinate.
        const double f = c_skip(t) + c_out(t) * s.alpha_hat(t);
        const Vec out = consistency_fn(eps, z, t, c, s);
        CHECK(out[0] == doctest::Approx(f * z[0]).epsilon(1e-13));
        CHECK(out[1] == doctest::Approx(f * z[1]).epsilon(1e-13));
    }
}

TEST_CASE("the oracle consistency map is exact transport to the origin") {
    const auto s = default_schedule();
    const ConsistencyMap map =
        consistency_from_oracle(GaussianOracle{{2.0}, {0.25}}, s);
    const Vec z = {1.3};
    const Vec got = map(z, 70, Condition::null_condition());
    const Vec want = oracle_origin(GaussianOracle{{2.0}, {0.25}}, z, 70, s);
    CHECK(got[0] == want[0]);
}

TEST_CASE("ema blending matches the hand formula and validates shapes") {
    TensorList slow;
    slow.push_back(Tensor::zeros("a", {2}));
    slow[0].data = {1.0, -2.0};
    TensorList fast;
    fast.push_back(Tensor::zeros("a", {2}));
    fast[0].data = {3.0, 2.0};

    TensorList blended = slow;
    ema_update(blended, fast, 0.95);
    CHECK(blended[0].data[0] == doctest::Approx(0.95 * 1.0 + 0.05 * 3.0).epsilon(1e-15));
    CHECK(blended[0].data[1] == doctest::Approx(0.95 * -2.0 + 0.05 * 2.0).epsilon(1e-15));

    TensorList copy = slow;
    ema_update(copy, fast, 0.0);  // mu = 0 overwrites with the fast weights
    CHECK(copy[0].data == fast[0].data);
    TensorList frozen = slow;
    ema_update(frozen, fast, 1.0);  // mu = 1 never moves
    CHECK(frozen[0].data == slow[0].data);

    CHECK_THROWS_AS(ema_update(slow, fast, 1.5), ConfigError);
    CHECK_THROWS_AS(ema_update(slow, fast, -0.1), ConfigError);
    TensorList extra = fast;
    extra.push_back(Tensor::zeros("b", {1}));
    CHECK_THROWS_AS(ema_update(slow, extra, 0.5), ConfigError);
    TensorList wide;
    wide.push_back(Tensor::zeros("a", {3}));
    CHECK_THROWS_AS(ema_update(slow, wide, 0.5), ConfigError);
}

TEST_CASE("distillation construction rejects inconsistent settings") {
    const auto s = default_schedule();
    const auto model = DenoiserModel::init(small_config(), 11);
    const EpsFn teacher = eps_from_oracle(GaussianOracle{{0.0, 0.0}, {1.0, 1.0}}, s);

    auto with = [&](auto mutate) {
        LcdConfig cfg;
        mutate(cfg);
        return LcdTrainer(model, teacher, cfg, s, 1);
    };
    CHECK_THROWS_AS(with([](LcdConfig& c) { c.skip = 0; }), ConfigError);
    CHECK_THROWS_AS(with([](LcdConfig& c) { c.skip = 100; }), ConfigError);
    CHECK_THROWS_AS(with([](LcdConfig& c) { c.ema_rate = 1.1; }), ConfigError);
    CHECK_THROWS_AS(with([](LcdConfig& c) { c.guidance = -0.2; }), ConfigError);
    CHECK_THROWS_AS(with([](LcdConfig& c) { c.shape.sigma_data = 0.0; }), ConfigError);
    CHECK_THROWS_AS(LcdTrainer(model, EpsFn{}, LcdConfig{}, s, 1), ConfigError);

    auto mismatched_cfg = small_config();
    mismatched_cfg.schedule_steps = 50;
    CHECK_THROWS_AS(LcdTrainer(DenoiserModel::init(mismatched_cfg, 11), teacher,
                               LcdConfig{}, s, 1),
                    ConfigError);
}

TEST_CASE("the per-row loss matches a by-hand recomputation for a fresh student") {
    const auto s = default_schedule();
    auto trainer = make_trainer();
    const int k = trainer.config().skip;
    const auto batch = sample_dataset(small_spec(), 4, 5);
    const Condition& c = batch.cond[0];
    const Vec z_tk = {0.7, -1.4};
    const int t = 37;

    // Oracle teacher ignores conditioning, so the guided solve collapses to
    // the plain jump factor for standard-normal data.
    const double solve_f = s.alpha_hat(t) * s.alpha_hat(t + k) +
                           s.sigma_hat(t) * s.sigma_hat(t + k);
    // Both network branches have zero-initialized heads, so each consistency
    // map is (c_skip + c_out / alpha_hat) at its own step.
    const double target_f = (c_skip(t) + c_out(t) / s.alpha_hat(t)) * solve_f;
    const double student_f = c_skip(t + k) + c_out(t + k) / s.alpha_hat(t + k);
    double want = 0.0;
    for (double v : z_tk) {
        const double diff = (student_f - target_f) * v;
        want += diff * diff;
    }
    want /= double(z_tk.size());

    const double got = trainer.lcd_loss(z_tk, t, c, nullptr);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(trainer.lcd_loss(z_tk, 0, c, nullptr), std::out_of_range);
    CHECK_THROWS_AS(trainer.lcd_loss(z_tk, 91, c, nullptr), std::out_of_range);
    CHECK_THROWS_AS(trainer.lcd_loss({1.0}, t, c, nullptr), std::invalid_argument);
}

TEST_CASE("the loss accumulates nonzero student gradients") {
    auto trainer = make_trainer();
    const auto batch = sample_dataset(small_spec(), 1, 6);
    TensorList grads = trainer.student().zero_grads();
    trainer.lcd_loss({0.7, -1.4}, 37, batch.cond[0], &grads);
    double total = 0.0;
    for (const auto& g : grads) {
        for (double v : g.data) total += std::fabs(v);
    }
    CHECK(total > 0.0);
}

TEST_CASE("the slow weights trail the student through the ema blend") {
    auto trainer = make_trainer();
    // Freshly constructed: the slow branch is an exact copy of the student.
    const auto& sp = trainer.student().params();
    const auto& ep = trainer.ema().params();
    for (std::size_t i = 0; i < sp.size(); ++i) CHECK(sp[i].data == ep[i].data);

    const TensorList ema_before = trainer.ema().params();
    const auto batch = sample_dataset(small_spec(), 8, 7);
    trainer.distill_step(batch);
    const double mu = trainer.config().ema_rate;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        for (std::size_t j = 0; j < sp[i].size(); ++j) {
            const double want = mu * ema_before[i].data[j] + (1.0 - mu) * sp[i].data[j];
            CHECK(ep[i].data[j] == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("distillation steps validate the batch and reduce the loss") {
    auto trainer = make_trainer();
    CHECK_THROWS_AS(trainer.distill_step(LatentBatch{}), ConfigError);
    LatentBatch bad;
    bad.dim = 3;
    bad.z = {{0.0, 0.0, 0.0}};
    bad.cond = {Condition::null_condition()};
    bad.component = {0};
    CHECK_THROWS_AS(trainer.distill_step(bad), ConfigError);

    const auto data = sample_dataset(small_spec(), 256, 21);
    Rng rng(77);
    double first_avg = 0.0, last_avg = 0.0;
    const int iters = 200;
    for (int i = 0; i < iters; ++i) {
        LatentBatch batch;
        batch.dim = data.dim;
        for (int b = 0; b < 16; ++b) {
            const auto row = std::size_t(rng.uniform_int(data.size()));
            batch.z.push_back(data.z[row]);
            batch.cond.push_back(data.cond[row]);
            batch.component.push_back(data.component[row]);
        }
        const double loss = trainer.distill_step(batch);
        CHECK(std::isfinite(loss));
        if (i < 10) first_avg += loss / 10.0;
        if (i >= iters - 10) last_avg += loss / 10.0;
    }
    CHECK(trainer.step() == iters);
    CHECK(last_avg < first_avg);
}

TEST_CASE("the trajectory-gap monitor is finite and validates its inputs") {
    auto trainer = make_trainer();
    const auto probe = sample_dataset(small_spec(), 4, 31);
    const double gap = trainer.self_consistency_gap(probe, 3);
    CHECK(std::isfinite(gap));
    CHECK(gap >= 0.0);
    CHECK_THROWS_AS(trainer.self_consistency_gap(LatentBatch{}, 3), ConfigError);
    CHECK_THROWS_AS(trainer.self_consistency_gap(probe, 0), ConfigError);
}
