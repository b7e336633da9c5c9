#include "latentcd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "latentcd/diffusion.hpp"
#include "latentcd/errors.hpp"
#include "latentcd/hash.hpp"
#include "latentcd/lcm.hpp"
#include "latentcd/metrics.hpp"

namespace latentcd {

namespace {

long long percentile_nearest_rank(std::vector<long long> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * double(v.size() - 1);
    const auto idx = std::size_t(std::llround(pos));
    return v[std::min(idx, v.size() - 1)];
}

struct SamplerRun {
    EpsFn eps;                       // counted predictor behind everything
    std::shared_ptr<std::size_t> calls;
    std::function<Vec(std::uint64_t seed)> draw;
};

SamplerRun build_sampler(const DenoiserModel& m, const SamplerSpec& spec,
                         const Condition& c, const NoiseSchedule& s,
                         const ConsistencyShape& shape, double guidance) {
    SamplerRun run;
    run.calls = std::make_shared<std::size_t>(0);
    run.eps = counted_eps(eps_from_model(m), run.calls);
    const int dim = m.config().latent_dim;
    if (spec.kind == SamplerSpec::Kind::Teacher) {
        run.draw = [eps = run.eps, c, s, dim](std::uint64_t seed) {
            return ancestral_sample(eps, c, s, dim, seed);
        };
    } else {
        EpsFn eps = run.eps;
        if (guidance > 0.0) eps = guided_eps(std::move(eps), guidance);
        ConsistencyMap f = consistency_from_eps(std::move(eps), s, shape);
        const std::vector<int> taus = make_tau_sequence(spec.steps, s.steps());
        run.draw = [f = std::move(f), c, taus, s, dim](std::uint64_t seed) {
            return lcm_sample(f, c, taus, s, dim, seed);
        };
    }
    return run;
}

std::uint64_t hash_outputs(const std::vector<Vec>& outs) {
    Fnv1a64 h;
    for (const auto& o : outs) h.update(o.data(), o.size() * sizeof(double));
    return h.digest();
}

}  // namespace

SamplerSpec parse_sampler_spec(const std::string& label, int schedule_steps) {
    const auto dash = label.rfind('-');
    if (dash == std::string::npos) {
        throw ConfigError("bench: bad method label '" + label +
                          "' (expected teacher-T or lcm-N)");
    }
    const std::string kind = label.substr(0, dash);
    const std::string num = label.substr(dash + 1);
    int steps = 0;
    try {
        steps = std::stoi(num);
    } catch (...) {
        throw ConfigError("bench: bad step count in method label '" + label + "'");
    }
    SamplerSpec spec;
    if (kind == "teacher") {
        if (steps != schedule_steps) {
            throw ConfigError("bench: teacher chain length must equal the schedule (" +
                              std::to_string(schedule_steps) + ")");
        }
        spec.kind = SamplerSpec::Kind::Teacher;
        spec.steps = steps;
    } else if (kind == "lcm") {
        if (steps < 1 || steps > schedule_steps) {
            throw ConfigError("bench: lcm step count outside 1..T in '" + label + "'");
        }
        spec.kind = SamplerSpec::Kind::Lcm;
        spec.steps = steps;
    } else {
        throw ConfigError("bench: unknown method '" + kind + "'");
    }
    return spec;
}

BenchRecord bench_sampler(const DenoiserModel& m, const std::string& method,
                          const Condition& c, const NoiseSchedule& s,
                          const ConsistencyShape& shape, const BenchOptions& opts) {
    if (opts.trials < 5) throw ConfigError("bench: need at least 5 trials");
    if (opts.samples < 1) throw ConfigError("bench: need at least 1 sample per trial");
    if (opts.warmups < 0) throw ConfigError("bench: warmups must be >= 0");
    if (m.config().schedule_steps != s.steps()) {
        throw ConfigError("bench: model/schedule step-count mismatch");
    }
    const SamplerSpec spec = parse_sampler_spec(method, s.steps());
    SamplerRun run = build_sampler(m, spec, c, s, shape, opts.guidance);

    BenchRecord rec;
    rec.method = method;
    rec.dim = m.config().latent_dim;
    rec.batch = opts.samples;
    rec.trials = opts.trials;

    // Denoiser invocations per sample are measured, not assumed.
    *run.calls = 0;
    Vec probe = run.draw(opts.seed);
    rec.steps_per_sample = int(*run.calls);

    std::vector<Vec> outs(opts.samples);
    for (int w = 0; w < opts.warmups; ++w) {
        for (int i = 0; i < opts.samples; ++i) outs[i] = run.draw(opts.seed + i);
    }

    std::vector<long long> per_sample_ns(opts.trials);
    std::uint64_t hash = 0;
    for (int trial = 0; trial < opts.trials; ++trial) {
        const auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < opts.samples; ++i) outs[i] = run.draw(opts.seed + i);
        const auto t1 = std::chrono::steady_clock::now();
        const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0);
        per_sample_ns[trial] = ns.count() / opts.samples;
        const std::uint64_t trial_hash = hash_outputs(outs);
        if (trial == 0) {
            hash = trial_hash;
        } else if (trial_hash != hash) {
            // Identical seeds must give identical samples in every trial;
            // anything else means timing changed the computation.
            throw DivergenceError("bench: outputs differ between trials");
        }
    }
    rec.output_hash = hash;
    rec.wall_ns_median = percentile_nearest_rank(per_sample_ns, 0.5);
    rec.wall_ns_p10 = percentile_nearest_rank(per_sample_ns, 0.1);
    rec.wall_ns_p90 = percentile_nearest_rank(per_sample_ns, 0.9);
    return rec;
}

std::uint64_t sampler_output_hash(const DenoiserModel& m, const std::string& method,
                                  const Condition& c, const NoiseSchedule& s,
                                  const ConsistencyShape& shape,
                                  const BenchOptions& opts) {
    const SamplerSpec spec = parse_sampler_spec(method, s.steps());
    SamplerRun run = build_sampler(m, spec, c, s, shape, opts.guidance);
    std::vector<Vec> outs(opts.samples);
    for (int i = 0; i < opts.samples; ++i) outs[i] = run.draw(opts.seed + i);
    return hash_outputs(outs);
}

std::string bench_csv_header() {
    return "method,steps,wall_ns_median,wall_ns_p10,wall_ns_p90,dim,batch,trials,output_hash";
}

std::string bench_csv_row(const BenchRecord& r) {
    std::string out = r.method;
    out += ',' + std::to_string(r.steps_per_sample);
    out += ',' + std::to_string(r.wall_ns_median);
    out += ',' + std::to_string(r.wall_ns_p10);
    out += ',' + std::to_string(r.wall_ns_p90);
    out += ',' + std::to_string(r.dim);
    out += ',' + std::to_string(r.batch);
    out += ',' + std::to_string(r.trials);
    out += ',' + hex_u64(r.output_hash);
    return out;
}

}  // namespace latentcd
