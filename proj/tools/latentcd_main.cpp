// latentcd: train a diffusion teacher on synthetic latent distributions,
// distill it into a few-step consistency model, sample, evaluate moments, and
// benchmark sampler latency. Every run is a pure function of (config, seed).

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latentcd/config.hpp"
#include "latentcd/errors.hpp"
#include "latentcd/experiment.hpp"
#include "latentcd/metrics.hpp"

namespace {

using latentcd::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitIo = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

// --config is required; --seed overrides run.seed; --out overrides run.out.
void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory (default: run.out)");
    cmd->add_option("--seed", args.seed, "override run.seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg = latentcd::parse_config_file(args.config_path);
    if (args.seed_set) cfg.run_seed = args.seed;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent consistency distillation engine"};
    app.require_subcommand(1);

    CommonArgs train_args, distill_args, sample_args, eval_args, bench_args;
    std::string distill_ckpt, sample_ckpt, bench_ckpt, eval_samples, bench_methods;
    int sample_steps = 0;
    int sample_count = 1024;
    bool sample_use_ema = false;

    auto* train = app.add_subcommand("train-teacher", "train the diffusion teacher");
    add_common(train, train_args);

    auto* distill =
        app.add_subcommand("distill", "consistency-distill a trained teacher");
    add_common(distill, distill_args);
    distill->add_option("--checkpoint", distill_ckpt, "teacher checkpoint")->required();

    auto* sample = app.add_subcommand("sample", "few-step consistency inference");
    add_common(sample, sample_args);
    sample->add_option("--checkpoint", sample_ckpt,
                       "student checkpoint (or distill output directory)")
        ->required();
    sample->add_option("--steps", sample_steps, "inference steps (default: infer.steps)");
    sample->add_option("--samples", sample_count, "number of samples to draw");
    sample->add_flag("--use-ema", sample_use_ema,
                     "resolve a directory checkpoint to its EMA weights");

    auto* eval = app.add_subcommand("eval", "compare sample moments against the config");
    add_common(eval, eval_args);
    eval->add_option("--samples", eval_samples, "latents file produced by sample")
        ->required();

    auto* bench = app.add_subcommand("bench", "sampler latency benchmark");
    add_common(bench, bench_args);
    bench->add_option("--checkpoint", bench_ckpt, "model checkpoint")->required();
    bench->add_option("--methods", bench_methods,
                      "comma list of teacher-T / lcm-N methods");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed()) {
            const ExperimentConfig cfg = load_config(train_args);
            const auto res = latentcd::run_train_teacher(cfg, cfg.out_dir);
            std::printf("teacher: %s (final loss %s)\n", res.checkpoint.c_str(),
                        latentcd::format_double(res.final_loss).c_str());
        } else if (distill->parsed()) {
            const ExperimentConfig cfg = load_config(distill_args);
            const auto res = latentcd::run_distill(cfg, distill_ckpt, cfg.out_dir);
            std::printf("student: %s (final loss %s, self-consistency gap %s)\n",
                        res.student.c_str(),
                        latentcd::format_double(res.final_loss).c_str(),
                        latentcd::format_double(res.final_gap).c_str());
        } else if (sample->parsed()) {
            ExperimentConfig cfg = load_config(sample_args);
            if (sample_use_ema) cfg.use_ema = true;
            std::filesystem::path ckpt = sample_ckpt;
            if (std::filesystem::is_directory(ckpt)) {
                ckpt /= cfg.use_ema ? "student_ema.ckpt" : "student.ckpt";
            }
            const int steps = sample_steps > 0 ? sample_steps : cfg.infer_steps;
            const auto res = latentcd::run_sample(cfg, ckpt, steps, sample_count,
                                                  cfg.run_seed, cfg.out_dir);
            std::printf("samples: %s (%d-step inference)\n", res.latents.c_str(),
                        int(res.taus.size()) + 1);
        } else if (eval->parsed()) {
            const ExperimentConfig cfg = load_config(eval_args);
            const auto rep = latentcd::run_eval(cfg, eval_samples, cfg.out_dir);
            std::printf("eval: n=%d steps=%d mean_err=%s cov_err=%s\n", rep.n,
                        rep.n_steps, latentcd::format_double(rep.mean_err).c_str(),
                        latentcd::format_double(rep.cov_err).c_str());
        } else if (bench->parsed()) {
            const ExperimentConfig cfg = load_config(bench_args);
            std::vector<std::string> methods;
            if (bench_methods.empty()) {
                methods = {"teacher-" + std::to_string(cfg.schedule_steps), "lcm-1",
                           "lcm-2", "lcm-4"};
            } else {
                std::string tok;
                for (char ch : bench_methods + ",") {
                    if (ch == ',') {
                        if (!tok.empty()) methods.push_back(tok);
                        tok.clear();
                    } else if (ch != ' ') {
                        tok += ch;
                    }
                }
            }
            const auto records = latentcd::run_bench(cfg, bench_ckpt, methods, cfg.out_dir);
            for (const auto& r : records) {
                std::printf("%s: median %lld ns/sample (%d denoiser calls)\n",
                            r.method.c_str(), r.wall_ns_median, r.steps_per_sample);
            }
        }
    } catch (const latentcd::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return kExitDivergence;
    } catch (const latentcd::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const latentcd::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitOk;
}
