#include "latentcd/denoiser.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "latentcd/errors.hpp"
#include "latentcd/hash.hpp"
#include "latentcd/rng.hpp"

namespace latentcd {

namespace {

constexpr double kLnEps = 1e-5;  // layer-norm variance floor

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double silu_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

void check_even(int v, const char* what) {
    if (v < 2 || v % 2 != 0) {
        throw ConfigError(std::string(what) + " must be an even count >= 2");
    }
}

// Zero-mean unit-variance normalization of a; writes xhat and returns 1/std.
double layer_norm(const Vec& a, Vec& xhat) {
    const std::size_t n = a.size();
    double mean = 0.0;
    for (double v : a) mean += v;
    mean /= double(n);
    double var = 0.0;
    for (double v : a) var += (v - mean) * (v - mean);
    var /= double(n);
    const double inv_std = 1.0 / std::sqrt(var + kLnEps);
    xhat.resize(n);
    for (std::size_t i = 0; i < n; ++i) xhat[i] = (a[i] - mean) * inv_std;
    return inv_std;
}

}  // namespace

Vec scln_forward(const Vec& h, const Vec& speaker, const Tensor& scale_w,
                 const Tensor& shift_w) {
    if (scale_w.rows() != h.size() || shift_w.rows() != h.size() ||
        scale_w.cols() != speaker.size() || shift_w.cols() != speaker.size()) {
        throw std::invalid_argument("scln_forward: weight shape mismatch");
    }
    Vec xhat;
    layer_norm(h, xhat);
    Vec scale(h.size()), shift(h.size());
    matvec(scale_w, speaker, scale);
    matvec(shift_w, speaker, shift);
    Vec out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        out[i] = (1.0 + scale[i]) * xhat[i] + shift[i];
    }
    return out;
}

DenoiserModel DenoiserModel::init(const DenoiserConfig& cfg, std::uint64_t seed) {
    if (cfg.latent_dim < 1 || cfg.content_dim < 1 || cfg.speaker_dim < 1 ||
        cfg.f0_embed_dim < 1 || cfg.t_feat_dim < 1 || cfg.width < 1 ||
        cfg.depth < 1 || cfg.schedule_steps < 1) {
        throw ConfigError("denoiser: all dimensions must be >= 1");
    }
    check_even(cfg.t_sin_dim, "denoiser: t_sin_dim");

    DenoiserModel m;
    m.cfg_ = cfg;
    Rng rng(seed);

    auto xavier = [&rng](Tensor& t) {
        const double bound = std::sqrt(6.0 / double(t.rows() + t.cols()));
        for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * bound;
    };

    auto& p = m.params_;
    p.push_back(Tensor::zeros("t_proj.w", {std::size_t(cfg.t_feat_dim), std::size_t(cfg.t_sin_dim)}));
    xavier(p.back());
    p.push_back(Tensor::zeros("t_proj.b", {std::size_t(cfg.t_feat_dim)}));
    p.push_back(Tensor::zeros("f0_table", {256, std::size_t(cfg.f0_embed_dim)}));
    for (double& v : p.back().data) v = 0.1 * rng.normal();
    p.push_back(Tensor::zeros("null_embed", {std::size_t(cfg.cond_dim())}));
    for (double& v : p.back().data) v = 0.1 * rng.normal();

    int prev = cfg.input_dim();
    for (int l = 0; l < cfg.depth; ++l) {
        const std::string base = "hidden" + std::to_string(l);
        p.push_back(Tensor::zeros(base + ".w", {std::size_t(cfg.width), std::size_t(prev)}));
        xavier(p.back());
        p.push_back(Tensor::zeros(base + ".b", {std::size_t(cfg.width)}));
        p.push_back(Tensor::zeros(base + ".scln_scale",
                                  {std::size_t(cfg.width), std::size_t(cfg.speaker_dim)}));
        p.push_back(Tensor::zeros(base + ".scln_shift",
                                  {std::size_t(cfg.width), std::size_t(cfg.speaker_dim)}));
        prev = cfg.width;
    }
    // Zero-initialized head: a fresh model predicts zero noise, which keeps
    // early training and distillation bootstraps well behaved.
    p.push_back(Tensor::zeros("out.w", {std::size_t(cfg.latent_dim), std::size_t(prev)}));
    p.push_back(Tensor::zeros("out.b", {std::size_t(cfg.latent_dim)}));
    return m;
}

Vec DenoiserModel::timestep_features(int t) const {
    const int half = cfg_.t_sin_dim / 2;
    const double x = double(t) / double(cfg_.schedule_steps);
    Vec feats(cfg_.t_sin_dim);
    for (int i = 0; i < half; ++i) {
        // Geometric frequency ladder from 1 to 30 over the half band. The cap
        // keeps the finest period near 20 schedule steps: coarser than any
        // solver jump, so features (and the learned prediction) stay smooth
        // across timestep gaps that training never visits directly.
        const double freq =
            half > 1 ? std::exp(std::log(30.0) * double(i) / double(half - 1)) : 1.0;
        feats[i] = std::sin(freq * x);
        feats[half + i] = std::cos(freq * x);
    }
    return feats;
}

Vec DenoiserModel::condition_vector(const Condition& c) const {
    if (c.is_null) return params_[idx_null_embed()].data;

    if (int(c.content.size()) != cfg_.content_dim) {
        throw std::invalid_argument("denoiser: content dimension mismatch");
    }
    if (int(c.speaker.size()) != cfg_.speaker_dim) {
        throw std::invalid_argument("denoiser: speaker dimension mismatch");
    }
    if (c.f0_bins.empty()) {
        throw std::invalid_argument("denoiser: condition needs at least one F0 frame");
    }
    for (int b : c.f0_bins) {
        if (b < 0 || b > 255) {
            throw std::invalid_argument("denoiser: F0 bin outside 0..255");
        }
    }

    Vec cond(cfg_.cond_dim(), 0.0);
    std::size_t off = 0;
    for (int i = 0; i < cfg_.content_dim; ++i) cond[off++] = c.content[i];
    // Mean-pooled F0 embedding over frames.
    const Tensor& table = params_[idx_f0_table()];
    const double inv_frames = 1.0 / double(c.f0_bins.size());
    for (int b : c.f0_bins) {
        for (int i = 0; i < cfg_.f0_embed_dim; ++i) {
            cond[off + i] += table.at(std::size_t(b), std::size_t(i)) * inv_frames;
        }
    }
    off += cfg_.f0_embed_dim;
    for (int i = 0; i < cfg_.speaker_dim; ++i) cond[off++] = c.speaker[i];
    return cond;
}

Vec DenoiserModel::eval(const Vec& z_t, int t, const Condition& c, EvalCache* cache) const {
    if (int(z_t.size()) != cfg_.latent_dim) {
        throw std::invalid_argument("denoiser: latent dimension mismatch");
    }
    if (t < 1 || t > cfg_.schedule_steps) {
        throw std::invalid_argument("denoiser: step outside 1..T");
    }

    const Vec t_sin = timestep_features(t);
    Vec t_feat(cfg_.t_feat_dim);
    matvec(params_[idx_tproj_w()], t_sin, t_feat);
    axpy(1.0, params_[idx_tproj_b()].data, t_feat);

    const Vec cond = condition_vector(c);
    // The null branch normalizes with a zero speaker vector, which reduces
    // every speaker-conditioned norm to a plain layer norm.
    const Vec spk = c.is_null ? Vec(std::size_t(cfg_.speaker_dim), 0.0) : c.speaker;

    Vec h(cfg_.input_dim());
    std::size_t off = 0;
    for (double v : z_t) h[off++] = v;
    for (double v : t_feat) h[off++] = v;
    for (double v : cond) h[off++] = v;

    if (cache) {
        cache->model_id = this;
        cache->t = t;
        cache->is_null = c.is_null;
        cache->spk = spk;
        cache->t_sin = t_sin;
        cache->f0_bins = c.is_null ? std::vector<int>{} : c.f0_bins;
        cache->h0 = h;
        cache->layers.clear();
        cache->layers.resize(cfg_.depth);
    }

    for (int l = 0; l < cfg_.depth; ++l) {
        Vec a(cfg_.width);
        matvec(params_[idx_hidden_w(l)], h, a);
        axpy(1.0, params_[idx_hidden_b(l)].data, a);

        Vec xhat;
        const double inv_std = layer_norm(a, xhat);
        Vec scale(cfg_.width), shift(cfg_.width);
        matvec(params_[idx_scln_scale(l)], spk, scale);
        matvec(params_[idx_scln_shift(l)], spk, shift);

        Vec s(cfg_.width), out(cfg_.width);
        for (int i = 0; i < cfg_.width; ++i) {
            s[i] = (1.0 + scale[i]) * xhat[i] + shift[i];
            out[i] = silu(s[i]);
        }
        if (cache) {
            auto& lc = cache->layers[l];
            lc.input = h;
            lc.xhat = std::move(xhat);
            lc.inv_std = inv_std;
            lc.scale = std::move(scale);
            lc.s = std::move(s);
            lc.out = out;
        }
        h = std::move(out);
    }

    Vec eps(cfg_.latent_dim);
    matvec(params_[idx_out_w()], h, eps);
    axpy(1.0, params_[idx_out_b()].data, eps);
    return eps;
}

void DenoiserModel::backward_accum(const EvalCache& cache, const Vec& grad_out,
                                   TensorList& grads) const {
    if (cache.model_id != this) {
        throw std::invalid_argument("denoiser backward: cache from a different model");
    }
    if (int(grad_out.size()) != cfg_.latent_dim) {
        throw std::invalid_argument("denoiser backward: gradient dimension mismatch");
    }
    if (grads.size() != params_.size()) {
        throw std::invalid_argument("denoiser backward: gradient list shape mismatch");
    }

    const Vec& h_last =
        cfg_.depth > 0 ? cache.layers.back().out : cache.h0;
    axpy(1.0, grad_out, grads[idx_out_b()].data);
    outer_accum(grads[idx_out_w()], grad_out, h_last);

    Vec gh(cfg_.width, 0.0);
    matvec_t_accum(params_[idx_out_w()], grad_out, gh);

    for (int l = cfg_.depth - 1; l >= 0; --l) {
        const auto& lc = cache.layers[l];
        const int n = cfg_.width;

        // Through SiLU.
        Vec gs(n);
        for (int i = 0; i < n; ++i) gs[i] = gh[i] * silu_grad(lc.s[i]);

        // Affine modulation: s = (1 + scale) xhat + shift.
        outer_accum(grads[idx_scln_shift(l)], gs, cache.spk);
        Vec gscale(n);
        for (int i = 0; i < n; ++i) gscale[i] = gs[i] * lc.xhat[i];
        outer_accum(grads[idx_scln_scale(l)], gscale, cache.spk);

        Vec gxhat(n);
        for (int i = 0; i < n; ++i) gxhat[i] = gs[i] * (1.0 + lc.scale[i]);

        // Layer norm backward:
        //   da = inv_std * (gxhat - mean(gxhat) - xhat * mean(gxhat .* xhat))
        double m1 = 0.0, m2 = 0.0;
        for (int i = 0; i < n; ++i) {
            m1 += gxhat[i];
            m2 += gxhat[i] * lc.xhat[i];
        }
        m1 /= double(n);
        m2 /= double(n);
        Vec ga(n);
        for (int i = 0; i < n; ++i) {
            ga[i] = lc.inv_std * (gxhat[i] - m1 - lc.xhat[i] * m2);
        }

        axpy(1.0, ga, grads[idx_hidden_b(l)].data);
        outer_accum(grads[idx_hidden_w(l)], ga, lc.input);
        gh.assign(lc.input.size(), 0.0);
        matvec_t_accum(params_[idx_hidden_w(l)], ga, gh);
    }

    // gh is now the gradient at the network input; split it.
    const std::size_t t_off = std::size_t(cfg_.latent_dim);
    const std::size_t c_off = t_off + std::size_t(cfg_.t_feat_dim);

    Vec gtfeat(gh.begin() + t_off, gh.begin() + c_off);
    axpy(1.0, gtfeat, grads[idx_tproj_b()].data);
    outer_accum(grads[idx_tproj_w()], gtfeat, cache.t_sin);

    if (cache.is_null) {
        for (int i = 0; i < cfg_.cond_dim(); ++i) {
            grads[idx_null_embed()].data[i] += gh[c_off + i];
        }
    } else {
        // Content and speaker slices are data inputs; only the mean-pooled F0
        // embedding rows carry parameters.
        const std::size_t f0_off = c_off + std::size_t(cfg_.content_dim);
        const double inv_frames = 1.0 / double(cache.f0_bins.size());
        Tensor& table_g = grads[idx_f0_table()];
        for (int b : cache.f0_bins) {
            for (int i = 0; i < cfg_.f0_embed_dim; ++i) {
                table_g.at(std::size_t(b), std::size_t(i)) += gh[f0_off + i] * inv_frames;
            }
        }
    }
}

TensorList DenoiserModel::backward(const EvalCache& cache, const Vec& grad_out) const {
    TensorList grads = zero_grads();
    backward_accum(cache, grad_out, grads);
    return grads;
}

std::size_t DenoiserModel::param_count() const {
    std::size_t n = 0;
    for (const auto& t : params_) n += t.size();
    return n;
}

std::uint64_t DenoiserModel::param_hash() const {
    Fnv1a64 h;
    for (const auto& t : params_) {
        h.update(t.data.data(), t.data.size() * sizeof(double));
    }
    return h.digest();
}

}  // namespace latentcd
