#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentcd/bench.hpp"
#include "latentcd/config.hpp"
#include "latentcd/denoiser.hpp"
#include "latentcd/diffusion.hpp"
#include "latentcd/lcd.hpp"
#include "latentcd/schedule.hpp"
#include "latentcd/synthdata.hpp"

namespace latentcd {

// Builders from one validated config, shared by the command line tool and the
// test suites so both exercise identical plumbing.
NoiseSchedule make_schedule(const ExperimentConfig& cfg);
DataSpec make_data_spec(const ExperimentConfig& cfg);
DenoiserConfig make_model_config(const ExperimentConfig& cfg);
Optimizer make_optimizer(const std::string& kind, double lr);

// Reference moments of the configured data distribution (mixture-aware).
Vec reference_mean(const ExperimentConfig& cfg);
std::vector<double> reference_cov(const ExperimentConfig& cfg);

struct TrainTeacherResult {
    std::filesystem::path checkpoint;
    double final_loss = 0.0;
};
// Trains the teacher, writing out_dir/teacher.ckpt, teacher_metrics.csv
// (iter, loss, wall_ms) and teacher_meta.json.
TrainTeacherResult run_train_teacher(const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir);

struct DistillResult {
    std::filesystem::path student;
    std::filesystem::path ema;
    double final_loss = 0.0;
    double final_gap = 0.0;
};
// Distills against the teacher checkpoint, writing student.ckpt,
// student_ema.ckpt, lcd_metrics.csv (iter, loss, gap, wall_ms) and
// distill_meta.json.
DistillResult run_distill(const ExperimentConfig& cfg,
                          const std::filesystem::path& teacher_ckpt,
                          const std::filesystem::path& out_dir);

struct SampleRunResult {
    std::filesystem::path latents;
    std::filesystem::path sidecar;
    std::vector<int> taus;
};
// Few-step inference with the given consistency checkpoint: n samples, conditions
// cycled over the configured singers, written as a latents container plus a
// JSON sidecar (steps, taus, seed, model hash, per-sample component).
SampleRunResult run_sample(const ExperimentConfig& cfg,
                           const std::filesystem::path& checkpoint, int n_steps,
                           int n_samples, std::uint64_t seed,
                           const std::filesystem::path& out_dir);

// Same output format, but through the full ancestral teacher chain; lets the
// evaluator compare few-step inference against the teacher it distilled.
SampleRunResult run_sample_teacher(const ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint,
                                   int n_samples, std::uint64_t seed,
                                   const std::filesystem::path& out_dir);

struct EvalReport {
    int n = 0;
    int n_steps = 0;          // from the sidecar (-1 for teacher chains)
    double mean_err = 0.0;    // || sample mean - reference mean ||_2
    double cov_err = 0.0;     // Frobenius gap to the reference covariance
    double cov_err_rel = 0.0; // cov_err / ||reference covariance||_F
    double assign_acc = -1.0; // mixtures: fraction nearest their own component
};
EvalReport evaluate_samples(const ExperimentConfig& cfg,
                            const std::filesystem::path& latents);
// Writes out_dir/eval_report.csv for the samples file.
EvalReport run_eval(const ExperimentConfig& cfg, const std::filesystem::path& latents,
                    const std::filesystem::path& out_dir);

// Benchmarks each "teacher-T" / "lcm-N" method label and writes
// out_dir/bench.csv.
std::vector<BenchRecord> run_bench(const ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint,
                                   const std::vector<std::string>& methods,
                                   const std::filesystem::path& out_dir);

}  // namespace latentcd
