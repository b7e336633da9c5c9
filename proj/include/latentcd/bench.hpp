#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latentcd/denoiser.hpp"
#include "latentcd/lcd.hpp"
#include "latentcd/schedule.hpp"

namespace latentcd {

// Sampler label grammar: "teacher-T" (full ancestral chain, T must equal the
// schedule length) or "lcm-N" (N-step consistency inference, 1 <= N <= T).
struct SamplerSpec {
    enum class Kind { Teacher, Lcm };
    Kind kind = Kind::Lcm;
    int steps = 1;
};
SamplerSpec parse_sampler_spec(const std::string& label, int schedule_steps);

struct BenchOptions {
    int trials = 7;    // timed repetitions, >= 5
    int warmups = 2;   // untimed repetitions before the trials
    int samples = 16;  // samples generated per trial
    std::uint64_t seed = 99;
    double guidance = 0.0;  // > 0 wires classifier-free guidance into lcm runs
};

struct BenchRecord {
    std::string method;
    int steps_per_sample = 0;  // measured denoiser calls per sample
    long long wall_ns_median = 0;
    long long wall_ns_p10 = 0;
    long long wall_ns_p90 = 0;
    int dim = 0;
    int batch = 0;   // samples per trial
    int trials = 0;
    std::uint64_t output_hash = 0;  // fingerprint of the sampled values
};

// Runs the sampler samples-times per trial with per-sample seeds fixed across
// trials, so outputs are identical in every repetition (the hash proves it);
// only the clock varies. Reported wall numbers are per-sample nanoseconds at
// the nearest-rank median / p10 / p90 over trials. Denoiser calls per sample
// are measured through a counting wrapper, not assumed.
BenchRecord bench_sampler(const DenoiserModel& m, const std::string& method,
                          const Condition& c, const NoiseSchedule& s,
                          const ConsistencyShape& shape, const BenchOptions& opts);

// The exact values a bench run would produce, with no timing around them.
// Benchmarking must never change sampled values, and this is how that is
// checked.
std::uint64_t sampler_output_hash(const DenoiserModel& m, const std::string& method,
                                  const Condition& c, const NoiseSchedule& s,
                                  const ConsistencyShape& shape, const BenchOptions& opts);

std::string bench_csv_header();
std::string bench_csv_row(const BenchRecord& r);

}  // namespace latentcd
