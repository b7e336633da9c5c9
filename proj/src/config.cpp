#include "latentcd/config.hpp"

#include <charconv>
#include <cstdint>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "latentcd/errors.hpp"
#include "latentcd/metrics.hpp"
#include "latentcd/optimizer.hpp"

namespace latentcd {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <typename T>
T parse_int_value(const std::string& key, const std::string& text) {
    T v{};
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError("config: bad integer for '" + key + "': '" + text + "'");
    }
    return v;
}

double parse_double_value(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError("config: bad number for '" + key + "': '" + text + "'");
    }
    return v;
}

bool parse_bool_value(const std::string& key, const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError("config: bad bool for '" + key + "' (expected true/false)");
}

struct Field {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define INT_FIELD(key, member)                                                        \
    Field {                                                                           \
        key,                                                                          \
            [](ExperimentConfig& c, const std::string& v) {                           \
                c.member = parse_int_value<decltype(c.member)>(key, v);               \
            },                                                                        \
            [](const ExperimentConfig& c) { return std::to_string(c.member); }        \
    }

#define DOUBLE_FIELD(key, member)                                                     \
    Field {                                                                           \
        key,                                                                          \
            [](ExperimentConfig& c, const std::string& v) {                           \
                c.member = parse_double_value(key, v);                                \
            },                                                                        \
            [](const ExperimentConfig& c) { return format_double(c.member); }         \
    }

#define BOOL_FIELD(key, member)                                                       \
    Field {                                                                           \
        key,                                                                          \
            [](ExperimentConfig& c, const std::string& v) {                           \
                c.member = parse_bool_value(key, v);                                  \
            },                                                                        \
            [](const ExperimentConfig& c) { return c.member ? "true" : "false"; }     \
    }

#define STRING_FIELD(key, member)                                                     \
    Field {                                                                           \
        key, [](ExperimentConfig& c, const std::string& v) { c.member = v; },         \
            [](const ExperimentConfig& c) { return c.member; }                        \
    }

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = {
        INT_FIELD("schedule.steps", schedule_steps),
        DOUBLE_FIELD("schedule.beta_min", beta_min),
        DOUBLE_FIELD("schedule.beta_max", beta_max),
        STRING_FIELD("data.kind", data_kind),
        INT_FIELD("data.dim", data_dim),
        INT_FIELD("data.n", data_n),
        INT_FIELD("data.seed", data_seed),
        DOUBLE_FIELD("data.mean", data_mean),
        DOUBLE_FIELD("data.var", data_var),
        INT_FIELD("data.components", data_components),
        DOUBLE_FIELD("data.separation", data_separation),
        INT_FIELD("data.content_dim", content_dim),
        INT_FIELD("data.speaker_dim", speaker_dim),
        INT_FIELD("model.width", model_width),
        INT_FIELD("model.depth", model_depth),
        INT_FIELD("model.f0_embed_dim", f0_embed_dim),
        INT_FIELD("model.t_sin_dim", t_sin_dim),
        INT_FIELD("model.t_feat_dim", t_feat_dim),
        INT_FIELD("model.seed", model_seed),
        INT_FIELD("teacher.iters", teacher_iters),
        INT_FIELD("teacher.batch", teacher_batch),
        DOUBLE_FIELD("teacher.lr", teacher_lr),
        DOUBLE_FIELD("teacher.p_uncond", p_uncond),
        STRING_FIELD("teacher.optimizer", teacher_optimizer),
        INT_FIELD("lcd.iters", lcd_iters),
        INT_FIELD("lcd.batch", lcd_batch),
        DOUBLE_FIELD("lcd.mu", lcd_mu),
        DOUBLE_FIELD("lcd.guidance", lcd_guidance),
        INT_FIELD("lcd.skip", lcd_skip),
        DOUBLE_FIELD("lcd.lr", lcd_lr),
        STRING_FIELD("lcd.optimizer", lcd_optimizer),
        DOUBLE_FIELD("lcd.sigma_data", sigma_data),
        DOUBLE_FIELD("lcd.time_scale", time_scale),
        INT_FIELD("infer.steps", infer_steps),
        STRING_FIELD("infer.taus", infer_taus),
        BOOL_FIELD("infer.use_ema", use_ema),
        BOOL_FIELD("infer.guidance", infer_guidance),
        INT_FIELD("bench.trials", bench_trials),
        INT_FIELD("bench.warmups", bench_warmups),
        INT_FIELD("bench.samples", bench_samples),
        INT_FIELD("run.seed", run_seed),
        STRING_FIELD("run.out", out_dir),
    };
    return fields;
}

#undef INT_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD
#undef STRING_FIELD

const Field* find_field(const std::string& key) {
    for (const auto& f : schema()) {
        if (key == f.key) return &f;
    }
    return nullptr;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const Field* f = find_field(key);
        if (!f) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": duplicate key '" + key + "'");
        }
        f->set(cfg, value);
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    return parse_config_text(read_text(path));
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& f : schema()) {
        out += f.key;
        out += " = ";
        out += f.get(cfg);
        out += '\n';
    }
    return out;
}

void validate_config(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };

    if (cfg.schedule_steps < 1) fail("schedule.steps must be >= 1");
    if (!(cfg.beta_min > 0.0) || !(cfg.beta_max < 1.0) || cfg.beta_min > cfg.beta_max) {
        fail("need 0 < schedule.beta_min <= schedule.beta_max < 1");
    }
    if (cfg.data_kind != "gaussian" && cfg.data_kind != "mixture") {
        fail("data.kind must be gaussian or mixture");
    }
    if (cfg.data_dim < 1) fail("data.dim must be >= 1");
    if (cfg.data_n < 1) fail("data.n must be >= 1");
    if (!(cfg.data_var > 0.0)) fail("data.var must be positive");
    if (cfg.data_kind == "mixture" && cfg.data_components < 2) {
        fail("data.components must be >= 2 for mixtures");
    }
    if (cfg.content_dim < 1 || cfg.speaker_dim < 1) {
        fail("data.content_dim and data.speaker_dim must be >= 1");
    }
    if (cfg.model_width < 1 || cfg.model_depth < 1) {
        fail("model.width and model.depth must be >= 1");
    }
    if (cfg.f0_embed_dim < 1 || cfg.t_feat_dim < 1) {
        fail("model embedding widths must be >= 1");
    }
    if (cfg.t_sin_dim < 2 || cfg.t_sin_dim % 2 != 0) {
        fail("model.t_sin_dim must be an even count >= 2");
    }
    if (cfg.teacher_iters < 0 || cfg.lcd_iters < 0) fail("iteration counts must be >= 0");
    if (cfg.teacher_batch < 1 || cfg.lcd_batch < 1) fail("batch sizes must be >= 1");
    if (!(cfg.teacher_lr > 0.0) || !(cfg.lcd_lr > 0.0)) fail("learning rates must be positive");
    if (cfg.p_uncond < 0.0 || cfg.p_uncond > 1.0) fail("teacher.p_uncond outside [0, 1]");
    optimizer_kind_from_string(cfg.teacher_optimizer);
    optimizer_kind_from_string(cfg.lcd_optimizer);
    if (cfg.lcd_mu < 0.0 || cfg.lcd_mu > 1.0) fail("lcd.mu outside [0, 1]");
    if (cfg.lcd_guidance < 0.0) fail("lcd.guidance must be >= 0");
    if (cfg.lcd_skip < 1 || cfg.lcd_skip >= cfg.schedule_steps) {
        fail("lcd.skip must satisfy 1 <= k <= schedule.steps - 1");
    }
    if (!(cfg.sigma_data > 0.0) || !(cfg.time_scale > 0.0)) {
        fail("lcd.sigma_data and lcd.time_scale must be positive");
    }
    if (cfg.infer_steps < 1 || cfg.infer_steps > cfg.schedule_steps) {
        fail("infer.steps outside 1..schedule.steps");
    }
    if (cfg.bench_trials < 5) fail("bench.trials must be >= 5");
    if (cfg.bench_warmups < 0) fail("bench.warmups must be >= 0");
    if (cfg.bench_samples < 1) fail("bench.samples must be >= 1");
    if (cfg.out_dir.empty()) fail("run.out must not be empty");
    parse_tau_override(cfg);
}

std::vector<int> parse_tau_override(const ExperimentConfig& cfg) {
    std::vector<int> taus;
    const std::string& text = cfg.infer_taus;
    if (trim(text).empty()) return taus;
    std::istringstream in(text);
    std::string tok;
    int prev = cfg.schedule_steps;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        const int tau = parse_int_value<int>("infer.taus", tok);
        if (tau < 1 || tau >= prev) {
            throw ConfigError(
                "config: infer.taus must be strictly decreasing within 1..schedule.steps-1");
        }
        taus.push_back(tau);
        prev = tau;
    }
    return taus;
}

}  // namespace latentcd
