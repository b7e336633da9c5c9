// Python bindings for the core operations: schedules, synthetic data and
// oracles, the denoiser, teacher training, solvers, consistency distillation,
// few-step inference, F0 utilities and checkpoints.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "latentcd/checkpoint.hpp"
#include "latentcd/ddim.hpp"
#include "latentcd/denoiser.hpp"
#include "latentcd/diffusion.hpp"
#include "latentcd/errors.hpp"
#include "latentcd/f0.hpp"
#include "latentcd/lcd.hpp"
#include "latentcd/lcm.hpp"
#include "latentcd/schedule.hpp"
#include "latentcd/synthdata.hpp"

namespace py = pybind11;
using namespace latentcd;

namespace {

Optimizer opt_from(const std::string& kind, double lr) {
    Optimizer o;
    o.kind = optimizer_kind_from_string(kind);
    o.lr = lr;
    return o;
}

LcdConfig lcd_config_from(double mu, double guidance, int skip, double sigma_data,
                          double time_scale, const std::string& optimizer, double lr) {
    LcdConfig cfg;
    cfg.ema_rate = mu;
    cfg.guidance = guidance;
    cfg.skip = skip;
    cfg.shape = ConsistencyShape{sigma_data, time_scale};
    cfg.optimizer = opt_from(optimizer, lr);
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "latent consistency distillation engine (C++ core)";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<DivergenceError>(m, "DivergenceError");
    py::register_exception<IoError>(m, "IoError");

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_static("linear", &NoiseSchedule::linear, py::arg("steps"),
                    py::arg("beta_min"), py::arg("beta_max"))
        .def_property_readonly("steps", &NoiseSchedule::steps)
        .def("beta", &NoiseSchedule::beta)
        .def("alpha", &NoiseSchedule::alpha)
        .def("alpha_bar", &NoiseSchedule::alpha_bar)
        .def("alpha_hat", &NoiseSchedule::alpha_hat)
        .def("sigma_hat", &NoiseSchedule::sigma_hat)
        .def("coeffs_at", [](const NoiseSchedule& s, int t) {
            const auto c = s.coeffs_at(t);
            return py::make_tuple(c.alpha_hat, c.sigma_hat, c.alpha, c.beta);
        });

    py::class_<F0Contour>(m, "F0Contour")
        .def(py::init([](std::vector<double> hz) { return F0Contour{std::move(hz)}; }),
             py::arg("hz"))
        .def_readwrite("hz", &F0Contour::hz);
    m.def("voiced_mean", &voiced_mean);
    m.def("shift_f0", &shift_f0, py::arg("src"), py::arg("target_voiced_mean"));
    m.def("quantize_log_f0", &quantize_log_f0);
    m.def("quantize_log_f0_value", &quantize_log_f0_value);

    py::class_<Condition>(m, "Condition")
        .def(py::init([](Vec content, std::vector<int> f0_bins, Vec speaker) {
                 Condition c;
                 c.content = std::move(content);
                 c.f0_bins = std::move(f0_bins);
                 c.speaker = std::move(speaker);
                 return c;
             }),
             py::arg("content"), py::arg("f0_bins"), py::arg("speaker"))
        .def_static("null_condition", &Condition::null_condition)
        .def_readwrite("content", &Condition::content)
        .def_readwrite("f0_bins", &Condition::f0_bins)
        .def_readwrite("speaker", &Condition::speaker)
        .def_readwrite("is_null", &Condition::is_null);

    py::class_<DataSpec>(m, "DataSpec")
        .def_static("gaussian", &DataSpec::gaussian, py::arg("mean"), py::arg("var"),
                    py::arg("content_dim"), py::arg("speaker_dim"), py::arg("singer_seed"))
        .def_static("mixture", &DataSpec::mixture, py::arg("means"), py::arg("vars"),
                    py::arg("content_dim"), py::arg("speaker_dim"), py::arg("singer_seed"))
        .def_readonly("dim", &DataSpec::dim)
        .def_readonly("content_dim", &DataSpec::content_dim)
        .def("mixture_mean", &DataSpec::mixture_mean)
        .def("mixture_cov", &DataSpec::mixture_cov)
        .def("singer_speaker",
             [](const DataSpec& s, int k) { return s.components.at(k).singer.speaker; })
        .def("singer_f0",
             [](const DataSpec& s, int k) { return s.components.at(k).singer.f0; });

    py::class_<LatentBatch>(m, "LatentBatch")
        .def_readonly("dim", &LatentBatch::dim)
        .def_readonly("z", &LatentBatch::z)
        .def_readonly("cond", &LatentBatch::cond)
        .def_readonly("component", &LatentBatch::component)
        .def("__len__", &LatentBatch::size);
    m.def("sample_dataset", &sample_dataset, py::arg("spec"), py::arg("n"), py::arg("seed"));

    py::class_<GaussianOracle>(m, "GaussianOracle")
        .def(py::init([](Vec mean, Vec var) { return GaussianOracle{std::move(mean), std::move(var)}; }),
             py::arg("mean"), py::arg("var"))
        .def_readwrite("mean", &GaussianOracle::mean)
        .def_readwrite("var", &GaussianOracle::var);
    m.def("oracle_posterior_mean", &oracle_posterior_mean);
    m.def("oracle_eps", &oracle_eps);
    m.def(
        "oracle_flow",
        [](const GaussianOracle& o, const Vec& z, int t, int s_target,
           const NoiseSchedule& s) { return oracle_flow(o, z, t, s_target, s); },
        py::arg("oracle"), py::arg("z_t"), py::arg("t"), py::arg("s_target"),
        py::arg("schedule"));
    m.def("oracle_origin", &oracle_origin);

    py::class_<DenoiserConfig>(m, "DenoiserConfig")
        .def(py::init<>())
        .def_readwrite("latent_dim", &DenoiserConfig::latent_dim)
        .def_readwrite("content_dim", &DenoiserConfig::content_dim)
        .def_readwrite("speaker_dim", &DenoiserConfig::speaker_dim)
        .def_readwrite("f0_embed_dim", &DenoiserConfig::f0_embed_dim)
        .def_readwrite("t_sin_dim", &DenoiserConfig::t_sin_dim)
        .def_readwrite("t_feat_dim", &DenoiserConfig::t_feat_dim)
        .def_readwrite("width", &DenoiserConfig::width)
        .def_readwrite("depth", &DenoiserConfig::depth)
        .def_readwrite("schedule_steps", &DenoiserConfig::schedule_steps);

    py::class_<DenoiserModel>(m, "DenoiserModel")
        .def_static("init", &DenoiserModel::init, py::arg("config"), py::arg("seed"))
        .def("eval",
             [](const DenoiserModel& m_, const Vec& z, int t, const Condition& c) {
                 return m_.eval(z, t, c);
             })
        .def("param_count", &DenoiserModel::param_count)
        .def("param_hash", &DenoiserModel::param_hash)
        .def_property_readonly("config", &DenoiserModel::config);

    m.def("forward_sample", &forward_sample);
    m.def("noise_mse",
          [](const Vec& pred, const Vec& target) { return noise_mse(pred, target); });
    m.def(
        "ancestral_sample",
        [](const DenoiserModel& m_, const Condition& c, const NoiseSchedule& s, int dim,
           std::uint64_t seed) {
            return ancestral_sample(eps_from_model(m_), c, s, dim, seed);
        },
        py::arg("model"), py::arg("cond"), py::arg("schedule"), py::arg("dim"),
        py::arg("seed"));
    m.def(
        "ddim_step",
        [](const DenoiserModel& m_, const Vec& z, int t_from, int t_to,
           const Condition& c, const NoiseSchedule& s) {
            return ddim_step(eps_from_model(m_), z, t_from, t_to, c, s);
        },
        py::arg("model"), py::arg("z_from"), py::arg("t_from"), py::arg("t_to"),
        py::arg("cond"), py::arg("schedule"));
    m.def(
        "guided_target",
        [](const DenoiserModel& m_, const Vec& z, int t_from, int t_to,
           const Condition& c, double guidance, const NoiseSchedule& s) {
            return guided_target(eps_from_model(m_), z, t_from, t_to, c, guidance, s);
        },
        py::arg("model"), py::arg("z_from"), py::arg("t_from"), py::arg("t_to"),
        py::arg("cond"), py::arg("guidance"), py::arg("schedule"));

    m.def(
        "c_skip",
        [](int t, double sigma_data, double time_scale) {
            return c_skip(t, ConsistencyShape{sigma_data, time_scale});
        },
        py::arg("t"), py::arg("sigma_data") = 0.5, py::arg("time_scale") = 10.0);
    m.def(
        "c_out",
        [](int t, double sigma_data, double time_scale) {
            return c_out(t, ConsistencyShape{sigma_data, time_scale});
        },
        py::arg("t"), py::arg("sigma_data") = 0.5, py::arg("time_scale") = 10.0);
    m.def(
        "consistency_fn",
        [](const DenoiserModel& m_, const Vec& z, int t, const Condition& c,
           const NoiseSchedule& s, double sigma_data, double time_scale) {
            return consistency_fn(eps_from_model(m_), z, t, c, s,
                                  ConsistencyShape{sigma_data, time_scale});
        },
        py::arg("model"), py::arg("z_t"), py::arg("t"), py::arg("cond"),
        py::arg("schedule"), py::arg("sigma_data") = 0.5, py::arg("time_scale") = 10.0);

    m.def("make_tau_sequence", &make_tau_sequence, py::arg("n_steps"),
          py::arg("schedule_steps"));
    m.def(
        "lcm_sample",
        [](const DenoiserModel& m_, const Condition& c, const std::vector<int>& taus,
           const NoiseSchedule& s, int dim, std::uint64_t seed, double sigma_data,
           double time_scale) {
            auto model = std::make_shared<const DenoiserModel>(m_);
            const auto f = consistency_from_eps(eps_from_model(std::move(model)), s,
                                                ConsistencyShape{sigma_data, time_scale});
            return lcm_sample(f, c, taus, s, dim, seed);
        },
        py::arg("model"), py::arg("cond"), py::arg("taus"), py::arg("schedule"),
        py::arg("dim"), py::arg("seed"), py::arg("sigma_data") = 0.5,
        py::arg("time_scale") = 10.0);
    m.def(
        "lcm_sample_oracle",
        [](const GaussianOracle& o, const std::vector<int>& taus, const NoiseSchedule& s,
           int dim, std::uint64_t seed) {
            return lcm_sample(consistency_from_oracle(o, s), Condition::null_condition(),
                              taus, s, dim, seed);
        },
        py::arg("oracle"), py::arg("taus"), py::arg("schedule"), py::arg("dim"),
        py::arg("seed"));
    m.def(
        "convert",
        [](const DenoiserModel& m_, const Vec& content_src, const F0Contour& f0_src,
           double target_voiced_mean, const Vec& speaker_tar, const std::vector<int>& taus,
           const NoiseSchedule& s, int dim, std::uint64_t seed, double sigma_data,
           double time_scale) {
            auto model = std::make_shared<const DenoiserModel>(m_);
            const auto f = consistency_from_eps(eps_from_model(std::move(model)), s,
                                                ConsistencyShape{sigma_data, time_scale});
            return convert(f, content_src, f0_src, target_voiced_mean, speaker_tar, taus,
                           s, dim, seed);
        },
        py::arg("model"), py::arg("content_src"), py::arg("f0_src"),
        py::arg("target_voiced_mean"), py::arg("speaker_tar"), py::arg("taus"),
        py::arg("schedule"), py::arg("dim"), py::arg("seed"),
        py::arg("sigma_data") = 0.5, py::arg("time_scale") = 10.0);

    py::class_<TeacherTrainer>(m, "TeacherTrainer")
        .def(py::init([](const DenoiserModel& model, double p_uncond,
                         const std::string& optimizer, double lr, std::uint64_t seed) {
                 TeacherConfig cfg;
                 cfg.p_uncond = p_uncond;
                 cfg.optimizer = opt_from(optimizer, lr);
                 return TeacherTrainer(model, cfg, seed);
             }),
             py::arg("model"), py::arg("p_uncond"), py::arg("optimizer"), py::arg("lr"),
             py::arg("seed"))
        .def("train_step", &TeacherTrainer::train_step, py::arg("batch"),
             py::arg("schedule"))
        .def_property_readonly("step", &TeacherTrainer::step)
        .def_property_readonly(
            "model", [](const TeacherTrainer& t) -> const DenoiserModel& { return t.model(); },
            py::return_value_policy::reference_internal);

    py::class_<LcdTrainer>(m, "LcdTrainer")
        .def(py::init([](const DenoiserModel& student, const DenoiserModel& teacher,
                         const NoiseSchedule& s, std::uint64_t seed, double mu,
                         double guidance, int skip, double sigma_data, double time_scale,
                         const std::string& optimizer, double lr) {
                 auto tp = std::make_shared<const DenoiserModel>(teacher);
                 return LcdTrainer(student, eps_from_model(std::move(tp)),
                                   lcd_config_from(mu, guidance, skip, sigma_data,
                                                   time_scale, optimizer, lr),
                                   s, seed);
             }),
             py::arg("student"), py::arg("teacher"), py::arg("schedule"), py::arg("seed"),
             py::arg("mu") = 0.95, py::arg("guidance") = 0.3, py::arg("skip") = 10,
             py::arg("sigma_data") = 0.5, py::arg("time_scale") = 10.0,
             py::arg("optimizer") = "sgd", py::arg("lr") = 5e-5)
        .def_static(
            "from_oracle",
            [](const DenoiserModel& student, const GaussianOracle& o,
               const NoiseSchedule& s, std::uint64_t seed, double mu, double guidance,
               int skip, double sigma_data, double time_scale,
               const std::string& optimizer, double lr) {
                return LcdTrainer(student, eps_from_oracle(o, s),
                                  lcd_config_from(mu, guidance, skip, sigma_data,
                                                  time_scale, optimizer, lr),
                                  s, seed);
            },
            py::arg("student"), py::arg("oracle"), py::arg("schedule"), py::arg("seed"),
            py::arg("mu") = 0.95, py::arg("guidance") = 0.3, py::arg("skip") = 10,
            py::arg("sigma_data") = 0.5, py::arg("time_scale") = 10.0,
            py::arg("optimizer") = "sgd", py::arg("lr") = 5e-5)
        .def("distill_step", &LcdTrainer::distill_step, py::arg("batch"))
        .def("self_consistency_gap", &LcdTrainer::self_consistency_gap, py::arg("probe"),
             py::arg("chains") = 8, py::arg("seed") = 0x5eed)
        .def_property_readonly("step", &LcdTrainer::step)
        .def_property_readonly(
            "student",
            [](const LcdTrainer& t) -> const DenoiserModel& { return t.student(); },
            py::return_value_policy::reference_internal)
        .def_property_readonly(
            "ema", [](const LcdTrainer& t) -> const DenoiserModel& { return t.ema(); },
            py::return_value_policy::reference_internal);

    m.def("save_model", &save_model, py::arg("path"), py::arg("model"));
    m.def("load_model", &load_model, py::arg("path"));
    m.def("save_latents", &save_latents, py::arg("path"), py::arg("rows"), py::arg("dim"));
    m.def("load_latents", &load_latents, py::arg("path"));
    m.def("checkpoint_content_hash", &checkpoint_content_hash, py::arg("path"));
}
