#include "latentcd/experiment.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include <json.hpp>

#include "latentcd/checkpoint.hpp"
#include "latentcd/ddim.hpp"
#include "latentcd/errors.hpp"
#include "latentcd/hash.hpp"
#include "latentcd/lcm.hpp"
#include "latentcd/metrics.hpp"
#include "latentcd/rng.hpp"

namespace latentcd {

namespace {

using nlohmann::json;

using Clock = std::chrono::steady_clock;

long long elapsed_ms(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)
        .count();
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

// Sequential slices with wraparound keep every training run a pure function
// of (dataset seed, run seed).
LatentBatch slice_batch(const LatentBatch& data, long long iter, int batch_size) {
    LatentBatch b;
    b.dim = data.dim;
    const std::size_t n = data.size();
    const std::size_t start = std::size_t((iter * batch_size) % (long long)n);
    for (int i = 0; i < batch_size; ++i) {
        const std::size_t row = (start + i) % n;
        b.z.push_back(data.z[row]);
        b.cond.push_back(data.cond[row]);
        b.component.push_back(data.component[row]);
    }
    return b;
}

json singer_json(const DataSpec& spec) {
    json arr = json::array();
    for (std::size_t k = 0; k < spec.components.size(); ++k) {
        const auto& s = spec.components[k].singer;
        arr.push_back({{"component", k},
                       {"speaker", s.speaker},
                       {"f0_bins", quantize_log_f0(s.f0)}});
    }
    return arr;
}

std::filesystem::path sidecar_path(const std::filesystem::path& latents) {
    std::filesystem::path p = latents;
    p.replace_filename(latents.stem().string() + "_meta.json");
    return p;
}

void write_json(const std::filesystem::path& path, const json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw IoError("bad JSON in '" + path.string() + "': " + e.what());
    }
}

ConsistencyShape shape_from(const ExperimentConfig& cfg) {
    return ConsistencyShape{cfg.sigma_data, cfg.time_scale};
}

}  // namespace

NoiseSchedule make_schedule(const ExperimentConfig& cfg) {
    return NoiseSchedule::linear(cfg.schedule_steps, cfg.beta_min, cfg.beta_max);
}

DataSpec make_data_spec(const ExperimentConfig& cfg) {
    const std::uint64_t singer_seed = cfg.data_seed ^ 0x51c957a1ull;
    if (cfg.data_kind == "gaussian") {
        return DataSpec::gaussian(Vec(cfg.data_dim, cfg.data_mean),
                                  Vec(cfg.data_dim, cfg.data_var), cfg.content_dim,
                                  cfg.speaker_dim, singer_seed);
    }
    // Mixture components sit on a symmetric per-coordinate lattice around
    // data.mean with spacing controlled by data.separation.
    std::vector<Vec> means, vars;
    const int k_count = cfg.data_components;
    for (int k = 0; k < k_count; ++k) {
        const double offset =
            cfg.data_separation * double(2 * k - (k_count - 1)) / double(k_count - 1 > 0 ? k_count - 1 : 1);
        means.push_back(Vec(cfg.data_dim, cfg.data_mean + offset));
        vars.push_back(Vec(cfg.data_dim, cfg.data_var));
    }
    return DataSpec::mixture(std::move(means), std::move(vars), cfg.content_dim,
                             cfg.speaker_dim, singer_seed);
}

DenoiserConfig make_model_config(const ExperimentConfig& cfg) {
    DenoiserConfig mc;
    mc.latent_dim = cfg.data_dim;
    mc.content_dim = cfg.content_dim;
    mc.speaker_dim = cfg.speaker_dim;
    mc.f0_embed_dim = cfg.f0_embed_dim;
    mc.t_sin_dim = cfg.t_sin_dim;
    mc.t_feat_dim = cfg.t_feat_dim;
    mc.width = cfg.model_width;
    mc.depth = cfg.model_depth;
    mc.schedule_steps = cfg.schedule_steps;
    return mc;
}

Optimizer make_optimizer(const std::string& kind, double lr) {
    Optimizer opt;
    opt.kind = optimizer_kind_from_string(kind);
    opt.lr = lr;
    return opt;
}

Vec reference_mean(const ExperimentConfig& cfg) {
    return make_data_spec(cfg).mixture_mean();
}

std::vector<double> reference_cov(const ExperimentConfig& cfg) {
    return make_data_spec(cfg).mixture_cov();
}

TrainTeacherResult run_train_teacher(const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    const NoiseSchedule sched = make_schedule(cfg);
    const DataSpec spec = make_data_spec(cfg);
    const LatentBatch data = sample_dataset(spec, cfg.data_n, cfg.data_seed);

    DenoiserModel model = DenoiserModel::init(make_model_config(cfg), cfg.model_seed);
    TeacherConfig tc;
    tc.p_uncond = cfg.p_uncond;
    tc.optimizer = make_optimizer(cfg.teacher_optimizer, cfg.teacher_lr);
    TeacherTrainer trainer(std::move(model), tc, cfg.run_seed);

    CsvWriter metrics(out_dir / "teacher_metrics.csv", {"iter", "loss", "wall_ms"});
    const auto start = Clock::now();
    const long long log_every = std::max(1ll, cfg.teacher_iters / 200);
    double loss = 0.0;
    for (long long it = 0; it < cfg.teacher_iters; ++it) {
        loss = trainer.train_step(slice_batch(data, it, cfg.teacher_batch), sched);
        if (it % log_every == 0 || it + 1 == cfg.teacher_iters) {
            metrics.row({std::to_string(it), format_double(loss),
                         std::to_string(elapsed_ms(start))});
        }
    }
    metrics.close();

    TrainTeacherResult res;
    res.checkpoint = out_dir / "teacher.ckpt";
    res.final_loss = loss;
    save_model(res.checkpoint, trainer.model());

    json meta;
    meta["iters"] = cfg.teacher_iters;
    meta["final_loss"] = loss;
    meta["checkpoint_hash"] = hex_u64(checkpoint_content_hash(res.checkpoint));
    meta["dataset"] = {{"n", cfg.data_n}, {"dim", cfg.data_dim}, {"seed", cfg.data_seed}};
    meta["run_seed"] = cfg.run_seed;
    write_json(out_dir / "teacher_meta.json", meta);
    return res;
}

DistillResult run_distill(const ExperimentConfig& cfg,
                          const std::filesystem::path& teacher_ckpt,
                          const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    const NoiseSchedule sched = make_schedule(cfg);
    const DataSpec spec = make_data_spec(cfg);
    const LatentBatch data = sample_dataset(spec, cfg.data_n, cfg.data_seed);

    auto teacher = std::make_shared<const DenoiserModel>(load_model(teacher_ckpt));
    if (teacher->config().schedule_steps != sched.steps()) {
        throw ConfigError("distill: teacher checkpoint disagrees with schedule.steps");
    }

    LcdConfig lc;
    lc.ema_rate = cfg.lcd_mu;
    lc.guidance = cfg.lcd_guidance;
    lc.skip = cfg.lcd_skip;
    lc.shape = shape_from(cfg);
    lc.optimizer = make_optimizer(cfg.lcd_optimizer, cfg.lcd_lr);

    // The student starts as an exact copy of the teacher's weights.
    LcdTrainer trainer(*teacher, eps_from_model(teacher), lc, sched, cfg.run_seed);

    const LatentBatch probe = slice_batch(data, 0, std::min<int>(16, cfg.data_n));
    CsvWriter metrics(out_dir / "lcd_metrics.csv", {"iter", "loss", "gap", "wall_ms"});
    const auto start = Clock::now();
    const long long log_every = std::max(1ll, cfg.lcd_iters / 50);
    double loss = 0.0, gap = trainer.self_consistency_gap(probe);
    for (long long it = 0; it < cfg.lcd_iters; ++it) {
        loss = trainer.distill_step(slice_batch(data, it, cfg.lcd_batch));
        if (it % log_every == 0 || it + 1 == cfg.lcd_iters) {
            gap = trainer.self_consistency_gap(probe);
            metrics.row({std::to_string(it), format_double(loss), format_double(gap),
                         std::to_string(elapsed_ms(start))});
        }
    }
    metrics.close();

    DistillResult res;
    res.student = out_dir / "student.ckpt";
    res.ema = out_dir / "student_ema.ckpt";
    res.final_loss = loss;
    res.final_gap = gap;
    save_model(res.student, trainer.student());
    save_model(res.ema, trainer.ema());

    json meta;
    meta["iters"] = cfg.lcd_iters;
    meta["final_loss"] = loss;
    meta["final_gap"] = gap;
    meta["teacher_hash"] = hex_u64(checkpoint_content_hash(teacher_ckpt));
    meta["student_hash"] = hex_u64(checkpoint_content_hash(res.student));
    meta["ema_hash"] = hex_u64(checkpoint_content_hash(res.ema));
    meta["skip"] = cfg.lcd_skip;
    meta["guidance"] = cfg.lcd_guidance;
    meta["mu"] = cfg.lcd_mu;
    write_json(out_dir / "distill_meta.json", meta);
    return res;
}

namespace {

SampleRunResult write_sample_outputs(const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir,
                                     const std::string& kind, int n_steps,
                                     const std::vector<int>& taus, std::uint64_t seed,
                                     std::uint64_t model_hash, const DataSpec& spec,
                                     const std::vector<Vec>& rows,
                                     const std::vector<int>& components) {
    SampleRunResult res;
    res.latents = out_dir / "samples.bin";
    res.taus = taus;
    save_latents(res.latents, rows, cfg.data_dim);
    res.sidecar = sidecar_path(res.latents);

    json meta;
    meta["kind"] = kind;
    meta["n_steps"] = n_steps;
    meta["taus"] = taus;
    meta["seed"] = seed;
    meta["model_hash"] = hex_u64(model_hash);
    meta["n"] = rows.size();
    meta["dim"] = cfg.data_dim;
    meta["guidance"] = cfg.infer_guidance ? cfg.lcd_guidance : 0.0;
    meta["sample_component"] = components;
    meta["singers"] = singer_json(spec);
    meta["latents_hash"] = hex_u64(file_fnv1a(res.latents));
    write_json(res.sidecar, meta);
    return res;
}

}  // namespace

SampleRunResult run_sample(const ExperimentConfig& cfg,
                           const std::filesystem::path& checkpoint, int n_steps,
                           int n_samples, std::uint64_t seed,
                           const std::filesystem::path& out_dir) {
    if (n_samples < 1) throw ConfigError("sample: need at least one sample");
    if (n_steps < 1 || n_steps > cfg.schedule_steps) {
        throw ConfigError("sample: steps outside 1..schedule.steps");
    }
    ensure_dir(out_dir);
    const NoiseSchedule sched = make_schedule(cfg);
    const DataSpec spec = make_data_spec(cfg);
    auto model = std::make_shared<const DenoiserModel>(load_model(checkpoint));
    if (model->config().schedule_steps != sched.steps()) {
        throw ConfigError("sample: checkpoint disagrees with schedule.steps");
    }
    if (model->config().latent_dim != cfg.data_dim) {
        throw ConfigError("sample: checkpoint latent size disagrees with data.dim");
    }

    std::vector<int> taus = parse_tau_override(cfg);
    if (taus.empty()) taus = make_tau_sequence(n_steps, sched.steps());

    EpsFn eps = eps_from_model(model);
    if (cfg.infer_guidance) eps = guided_eps(std::move(eps), cfg.lcd_guidance);
    const ConsistencyMap f = consistency_from_eps(std::move(eps), sched, shape_from(cfg));

    Rng rng(seed);
    std::vector<Vec> rows;
    std::vector<int> components;
    rows.reserve(n_samples);
    const std::size_t k_count = spec.components.size();
    for (int i = 0; i < n_samples; ++i) {
        const int k = int(i % k_count);
        const auto& singer = spec.components[k].singer;
        Condition c;
        c.content = rng.normal_vec(std::size_t(cfg.content_dim));
        c.f0_bins = quantize_log_f0(singer.f0);
        c.speaker = singer.speaker;
        rows.push_back(lcm_sample(f, c, taus, sched, cfg.data_dim, rng));
        components.push_back(k);
    }
    return write_sample_outputs(cfg, out_dir, "lcm", int(taus.size()) + 1, taus, seed,
                                model->param_hash(), spec, rows, components);
}

SampleRunResult run_sample_teacher(const ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint,
                                   int n_samples, std::uint64_t seed,
                                   const std::filesystem::path& out_dir) {
    if (n_samples < 1) throw ConfigError("sample: need at least one sample");
    ensure_dir(out_dir);
    const NoiseSchedule sched = make_schedule(cfg);
    const DataSpec spec = make_data_spec(cfg);
    auto model = std::make_shared<const DenoiserModel>(load_model(checkpoint));
    if (model->config().schedule_steps != sched.steps()) {
        throw ConfigError("sample: checkpoint disagrees with schedule.steps");
    }
    const EpsFn eps = eps_from_model(model);

    Rng rng(seed);
    std::vector<Vec> rows;
    std::vector<int> components;
    rows.reserve(n_samples);
    const std::size_t k_count = spec.components.size();
    for (int i = 0; i < n_samples; ++i) {
        const int k = int(i % k_count);
        const auto& singer = spec.components[k].singer;
        Condition c;
        c.content = rng.normal_vec(std::size_t(cfg.content_dim));
        c.f0_bins = quantize_log_f0(singer.f0);
        c.speaker = singer.speaker;
        rows.push_back(ancestral_sample(eps, c, sched, cfg.data_dim, rng));
        components.push_back(k);
    }
    return write_sample_outputs(cfg, out_dir, "teacher", -1, {}, seed,
                                model->param_hash(), spec, rows, components);
}

EvalReport evaluate_samples(const ExperimentConfig& cfg,
                            const std::filesystem::path& latents) {
    const auto [rows, dim] = load_latents(latents);
    if (rows.empty()) throw ConfigError("eval: empty samples file");
    if (dim != cfg.data_dim) throw ConfigError("eval: sample dim disagrees with data.dim");
    const json meta = read_json(sidecar_path(latents));

    const DataSpec spec = make_data_spec(cfg);
    const Vec ref_mean = spec.mixture_mean();
    const std::vector<double> ref_cov = spec.mixture_cov();
    const std::size_t n = rows.size();

    Vec mean(dim, 0.0);
    for (const auto& r : rows) {
        for (int i = 0; i < dim; ++i) mean[i] += r[i];
    }
    for (double& v : mean) v /= double(n);

    std::vector<double> cov(std::size_t(dim) * dim, 0.0);
    for (const auto& r : rows) {
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                cov[std::size_t(i) * dim + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for (double& v : cov) v /= double(n);

    EvalReport rep;
    rep.n = int(n);
    rep.n_steps = meta.at("n_steps").get<int>();
    double m_err = 0.0;
    for (int i = 0; i < dim; ++i) {
        m_err += (mean[i] - ref_mean[i]) * (mean[i] - ref_mean[i]);
    }
    rep.mean_err = std::sqrt(m_err);
    double c_err = 0.0, c_ref = 0.0;
    for (std::size_t i = 0; i < cov.size(); ++i) {
        c_err += (cov[i] - ref_cov[i]) * (cov[i] - ref_cov[i]);
        c_ref += ref_cov[i] * ref_cov[i];
    }
    rep.cov_err = std::sqrt(c_err);
    rep.cov_err_rel = rep.cov_err / std::sqrt(c_ref);

    if (cfg.data_kind == "mixture") {
        const auto components = meta.at("sample_component").get<std::vector<int>>();
        if (components.size() != n) {
            throw IoError("eval: sidecar component labels disagree with the samples");
        }
        std::size_t hits = 0;
        for (std::size_t r = 0; r < n; ++r) {
            double best = 0.0;
            int best_k = -1;
            for (std::size_t k = 0; k < spec.components.size(); ++k) {
                double d2 = 0.0;
                for (int i = 0; i < dim; ++i) {
                    const double d = rows[r][i] - spec.components[k].mean[i];
                    d2 += d * d;
                }
                if (best_k < 0 || d2 < best) {
                    best = d2;
                    best_k = int(k);
                }
            }
            if (best_k == components[r]) ++hits;
        }
        rep.assign_acc = double(hits) / double(n);
    }
    return rep;
}

EvalReport run_eval(const ExperimentConfig& cfg, const std::filesystem::path& latents,
                    const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    const EvalReport rep = evaluate_samples(cfg, latents);
    CsvWriter csv(out_dir / "eval_report.csv",
                  {"n", "n_steps", "mean_err", "cov_err", "cov_err_rel", "assign_acc"});
    csv.row({std::to_string(rep.n), std::to_string(rep.n_steps),
             format_double(rep.mean_err), format_double(rep.cov_err),
             format_double(rep.cov_err_rel),
             rep.assign_acc < 0.0 ? "" : format_double(rep.assign_acc)});
    csv.close();
    return rep;
}

std::vector<BenchRecord> run_bench(const ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint,
                                   const std::vector<std::string>& methods,
                                   const std::filesystem::path& out_dir) {
    if (methods.empty()) throw ConfigError("bench: no methods given");
    ensure_dir(out_dir);
    const NoiseSchedule sched = make_schedule(cfg);
    const DataSpec spec = make_data_spec(cfg);
    const DenoiserModel model = load_model(checkpoint);
    if (model.config().schedule_steps != sched.steps()) {
        throw ConfigError("bench: checkpoint disagrees with schedule.steps");
    }

    // One fixed condition for every method, so latency differences come from
    // the samplers alone.
    Rng rng(cfg.run_seed);
    Condition c;
    c.content = rng.normal_vec(std::size_t(cfg.content_dim));
    c.f0_bins = quantize_log_f0(spec.components[0].singer.f0);
    c.speaker = spec.components[0].singer.speaker;

    BenchOptions opts;
    opts.trials = cfg.bench_trials;
    opts.warmups = cfg.bench_warmups;
    opts.samples = cfg.bench_samples;
    opts.seed = cfg.run_seed;
    opts.guidance = cfg.infer_guidance ? cfg.lcd_guidance : 0.0;

    std::vector<BenchRecord> records;
    CsvWriter csv(out_dir / "bench.csv", {"method", "steps", "wall_ns_median",
                                          "wall_ns_p10", "wall_ns_p90", "dim", "batch",
                                          "trials", "output_hash"});
    for (const auto& method : methods) {
        BenchRecord rec = bench_sampler(model, method, c, sched, shape_from(cfg), opts);
        csv.row({rec.method, std::to_string(rec.steps_per_sample),
                 std::to_string(rec.wall_ns_median), std::to_string(rec.wall_ns_p10),
                 std::to_string(rec.wall_ns_p90), std::to_string(rec.dim),
                 std::to_string(rec.batch), std::to_string(rec.trials),
                 hex_u64(rec.output_hash)});
        records.push_back(std::move(rec));
    }
    csv.close();
    return records;
}

}  // namespace latentcd
