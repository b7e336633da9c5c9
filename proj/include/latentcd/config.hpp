#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace latentcd {

// One experiment, fully described: schedule, data distribution, model size,
// teacher and distillation hyperparameters, inference, benchmark settings and
// the run seed. Serialized as flat "section.key = value" text; parsing is
// schema-checked (unknown or duplicate keys, bad types and out-of-range
// values all raise ConfigError) and serialize() round-trips exactly.
struct ExperimentConfig {
    // schedule
    int schedule_steps = 100;
    double beta_min = 1e-4;
    double beta_max = 0.06;

    // data
    std::string data_kind = "gaussian";  // gaussian | mixture
    int data_dim = 8;
    int data_n = 4096;
    std::uint64_t data_seed = 1;
    double data_mean = 0.0;        // gaussian: common per-coordinate mean
    double data_var = 1.0;         // per-coordinate variance (all components)
    int data_components = 2;       // mixture only
    double data_separation = 2.0;  // mixture: per-coordinate offset scale
    int content_dim = 4;
    int speaker_dim = 8;

    // model
    int model_width = 128;
    int model_depth = 2;
    int f0_embed_dim = 8;
    int t_sin_dim = 16;
    int t_feat_dim = 16;
    std::uint64_t model_seed = 17;

    // teacher
    long long teacher_iters = 20000;
    int teacher_batch = 32;
    double teacher_lr = 5e-5;
    double p_uncond = 0.1;
    std::string teacher_optimizer = "sgd";  // sgd | adam

    // lcd (distillation)
    long long lcd_iters = 4000;
    int lcd_batch = 32;
    double lcd_mu = 0.95;
    double lcd_guidance = 0.3;
    int lcd_skip = 10;
    double lcd_lr = 5e-5;
    std::string lcd_optimizer = "sgd";
    double sigma_data = 0.5;
    double time_scale = 10.0;

    // inference
    int infer_steps = 1;
    std::string infer_taus;  // optional comma list overriding the uniform grid
    bool use_ema = false;
    bool infer_guidance = false;  // re-enable solver-level guidance (ablation)

    // bench
    int bench_trials = 7;
    int bench_warmups = 2;
    int bench_samples = 16;

    // run
    std::uint64_t run_seed = 1234;
    std::string out_dir = "out";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Field-range and cross-field checks (e.g. 1 <= lcd.skip < schedule.steps).
void validate_config(const ExperimentConfig& cfg);

// The tau override list ("75,50,25") parsed and checked against the schedule;
// empty when no override is set.
std::vector<int> parse_tau_override(const ExperimentConfig& cfg);

}  // namespace latentcd
