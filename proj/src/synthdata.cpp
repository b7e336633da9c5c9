#include "latentcd/synthdata.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "latentcd/errors.hpp"
#include "latentcd/rng.hpp"

namespace latentcd {

namespace {

void check_spec_vectors(const std::vector<Vec>& means, const std::vector<Vec>& vars) {
    if (means.empty() || means.size() != vars.size()) {
        throw ConfigError("data spec: need one variance vector per mean vector");
    }
    const std::size_t dim = means[0].size();
    if (dim == 0) throw ConfigError("data spec: dimension must be >= 1");
    for (std::size_t k = 0; k < means.size(); ++k) {
        if (means[k].size() != dim || vars[k].size() != dim) {
            throw ConfigError("data spec: inconsistent component dimensions");
        }
        for (double v : vars[k]) {
            if (!(v > 0.0)) throw ConfigError("data spec: variances must be positive");
        }
    }
}

// Deterministic synthetic singer for component k: random speaker embedding
// plus a vibrato-like contour around a per-component base pitch, with the
// first and last frame unvoiced so bin 0 is exercised.
SingerProfile make_singer(int component, int speaker_dim, Rng& rng) {
    SingerProfile p;
    p.speaker = rng.normal_vec(speaker_dim);
    const double base = 160.0 + 120.0 * component;
    const int frames = 16;
    p.f0.hz.assign(frames, 0.0);
    for (int i = 1; i + 1 < frames; ++i) {
        p.f0.hz[i] = base * (1.0 + 0.1 * std::sin(2.0 * std::numbers::pi * i / frames));
    }
    return p;
}

}  // namespace

DataSpec DataSpec::gaussian(Vec mean, Vec var, int content_dim, int speaker_dim,
                            std::uint64_t singer_seed) {
    return mixture({std::move(mean)}, {std::move(var)}, content_dim, speaker_dim,
                   singer_seed);
}

DataSpec DataSpec::mixture(std::vector<Vec> means, std::vector<Vec> vars,
                           int content_dim, int speaker_dim,
                           std::uint64_t singer_seed) {
    check_spec_vectors(means, vars);
    if (content_dim < 1 || speaker_dim < 1) {
        throw ConfigError("data spec: content and speaker dimensions must be >= 1");
    }
    DataSpec spec;
    spec.dim = int(means[0].size());
    spec.content_dim = content_dim;
    Rng rng(singer_seed);
    for (std::size_t k = 0; k < means.size(); ++k) {
        GaussianComponent comp;
        comp.mean = std::move(means[k]);
        comp.var = std::move(vars[k]);
        comp.singer = make_singer(int(k), speaker_dim, rng);
        spec.components.push_back(std::move(comp));
    }
    return spec;
}

Vec DataSpec::mixture_mean() const {
    Vec m(dim, 0.0);
    for (const auto& c : components) {
        for (int i = 0; i < dim; ++i) m[i] += c.mean[i];
    }
    for (double& v : m) v /= double(components.size());
    return m;
}

std::vector<double> DataSpec::mixture_cov() const {
    // E[z z^T] - m m^T with diagonal within-component covariances.
    const Vec m = mixture_mean();
    std::vector<double> cov(std::size_t(dim) * dim, 0.0);
    const double w = 1.0 / double(components.size());
    for (const auto& c : components) {
        for (int i = 0; i < dim; ++i) {
            cov[std::size_t(i) * dim + i] += w * c.var[i];
            for (int j = 0; j < dim; ++j) {
                cov[std::size_t(i) * dim + j] +=
                    w * (c.mean[i] - m[i]) * (c.mean[j] - m[j]);
            }
        }
    }
    return cov;
}

LatentBatch sample_dataset(const DataSpec& spec, int n, std::uint64_t seed) {
    if (spec.components.empty()) throw ConfigError("sample_dataset: empty data spec");
    if (n < 1) throw ConfigError("sample_dataset: need n >= 1");
    LatentBatch batch;
    batch.dim = spec.dim;
    batch.z.reserve(n);
    batch.cond.reserve(n);
    batch.component.reserve(n);
    Rng rng(seed);
    for (int row = 0; row < n; ++row) {
        const int k = int(rng.uniform_int(spec.components.size()));
        const auto& comp = spec.components[k];
        Vec z(spec.dim);
        for (int i = 0; i < spec.dim; ++i) {
            z[i] = comp.mean[i] + std::sqrt(comp.var[i]) * rng.normal();
        }
        Condition c;
        c.content = rng.normal_vec(spec.content_dim);
        c.f0_bins = quantize_log_f0(comp.singer.f0);
        c.speaker = comp.singer.speaker;
        batch.z.push_back(std::move(z));
        batch.cond.push_back(std::move(c));
        batch.component.push_back(k);
    }
    return batch;
}

namespace {

void check_oracle(const GaussianOracle& o, const Vec& z_t) {
    if (o.mean.size() != o.var.size() || o.mean.empty()) {
        throw std::invalid_argument("oracle: mean/var dimension mismatch");
    }
    if (z_t.size() != o.mean.size()) {
        throw std::invalid_argument("oracle: latent dimension mismatch");
    }
    for (double v : o.var) {
        if (!(v > 0.0)) throw std::invalid_argument("oracle: variances must be positive");
    }
}

}  // namespace

Vec oracle_posterior_mean(const GaussianOracle& o, const Vec& z_t, int t,
                          const NoiseSchedule& s) {
    check_oracle(o, z_t);
    if (t == 0) return z_t;  // no noise at the boundary: the latent is the origin
    const auto c = s.coeffs_at(t);
    const double s2 = c.sigma_hat * c.sigma_hat;
    Vec out(z_t.size());
    for (std::size_t i = 0; i < z_t.size(); ++i) {
        // Gaussian conjugacy: posterior precision-weighted blend of the prior
        // mean and the rescaled observation.
        out[i] = (c.alpha_hat * o.var[i] * z_t[i] + s2 * o.mean[i]) /
                 (c.alpha_hat * c.alpha_hat * o.var[i] + s2);
    }
    return out;
}

Vec oracle_eps(const GaussianOracle& o, const Vec& z_t, int t, const NoiseSchedule& s) {
    check_oracle(o, z_t);
    if (t == 0) return Vec(z_t.size(), 0.0);
    const auto c = s.coeffs_at(t);
    const Vec post = oracle_posterior_mean(o, z_t, t, s);
    Vec out(z_t.size());
    for (std::size_t i = 0; i < z_t.size(); ++i) {
        out[i] = (z_t[i] - c.alpha_hat * post[i]) / c.sigma_hat;
    }
    return out;
}

namespace {

// One RK4 pass over u in [t_hi, t_lo] (descending) with n uniform steps per
// unit interval of the piecewise-linear log alpha_bar interpolation. The
// probability-flow velocity for a diagonal Gaussian prior is linear per
// coordinate:
//   dz/du = f(u) z - (f(u) + ...) -- expressed via the marginal moments:
//   dz/du = mu'(u) + 0.5 S'(u)/S(u) (z - mu(u))
// with mu(u) = alpha_hat(u) mean and S(u) = alpha_bar(u) var + 1 - alpha_bar(u),
// both induced by interpolating log alpha_bar linearly in u.
struct FlowField {
    const GaussianOracle* o;
    std::vector<double> log_abar;  // [T+1]

    // Velocity inside segment [j-1, j], where log alpha_bar is linear with a
    // fixed slope; u is the absolute position.
    void velocity(int j, double u, const Vec& z, Vec& dz) const {
        const double slope = log_abar[j] - log_abar[j - 1];
        const double la = log_abar[j - 1] + (u - double(j - 1)) * slope;
        const double abar = std::exp(la);
        const double ahat = std::exp(0.5 * la);
        const double dabar = abar * slope;  // d alpha_bar / du
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double mu = ahat * o->mean[i];
            const double dmu = 0.5 * ahat * slope * o->mean[i];
            const double S = abar * o->var[i] + 1.0 - abar;
            const double dS = dabar * (o->var[i] - 1.0);
            dz[i] = dmu + 0.5 * (dS / S) * (z[i] - mu);
        }
    }
};

// Integrates downward from u = t to u = s_target with steps_per_segment RK4
// steps inside each unit segment. Keeping steps aligned to segments matters:
// the interpolated log alpha_bar has slope kinks at integer steps, and a step
// straddling a kink would cap the integrator's convergence order.
Vec rk4_integrate(const FlowField& field, Vec z, int t, int s_target,
                  int steps_per_segment) {
    const std::size_t d = z.size();
    Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
    const double h = -1.0 / double(steps_per_segment);
    for (int j = t; j > s_target; --j) {
        for (int step = 0; step < steps_per_segment; ++step) {
            const double u = double(j) + h * step;
            field.velocity(j, u, z, k1);
            for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
            field.velocity(j, u + 0.5 * h, tmp, k2);
            for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
            field.velocity(j, u + 0.5 * h, tmp, k3);
            for (std::size_t i = 0; i < d; ++i) tmp[i] = z[i] + h * k3[i];
            field.velocity(j, u + h, tmp, k4);
            for (std::size_t i = 0; i < d; ++i) {
                z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    return z;
}

}  // namespace

Vec oracle_flow(const GaussianOracle& o, const Vec& z_t, int t, int s_target,
                const NoiseSchedule& s, const FlowOptions& opts) {
    check_oracle(o, z_t);
    if (t < 0 || t > s.steps()) throw std::out_of_range("oracle_flow: t outside 0..T");
    if (s_target > t) {
        throw std::invalid_argument("oracle_flow: target step must not exceed the source");
    }
    if (s_target < 0) throw std::out_of_range("oracle_flow: target step negative");
    if (s_target == t) return z_t;

    FlowField field;
    field.o = &o;
    field.log_abar.resize(s.steps() + 1);
    for (int j = 0; j <= s.steps(); ++j) field.log_abar[j] = std::log(s.alpha_bar(j));

    const int span = t - s_target;
    int per_seg = (opts.substeps + span - 1) / span;
    if (per_seg < 1) per_seg = 1;
    Vec coarse = rk4_integrate(field, z_t, t, s_target, per_seg);
    Vec fine = rk4_integrate(field, z_t, t, s_target, 2 * per_seg);
    for (int round = 0; round < 4; ++round) {
        double gap = 0.0;
        for (std::size_t i = 0; i < fine.size(); ++i) {
            gap = std::max(gap, std::fabs(fine[i] - coarse[i]));
        }
        if (gap <= opts.tolerance) return fine;
        per_seg *= 2;
        coarse = std::move(fine);
        fine = rk4_integrate(field, z_t, t, s_target, 2 * per_seg);
    }
    throw std::runtime_error("oracle_flow: step-halving did not converge");
}

Vec oracle_origin(const GaussianOracle& o, const Vec& z_t, int t, const NoiseSchedule& s) {
    check_oracle(o, z_t);
    if (t == 0) return z_t;
    const double abar = s.alpha_bar(t);
    const double ahat = s.alpha_hat(t);
    Vec out(z_t.size());
    for (std::size_t i = 0; i < z_t.size(); ++i) {
        const double S = abar * o.var[i] + 1.0 - abar;
        out[i] = o.mean[i] + std::sqrt(o.var[i] / S) * (z_t[i] - ahat * o.mean[i]);
    }
    return out;
}

}  // namespace latentcd
