#pragma once

#include <cstdint>
#include <vector>

#include "latentcd/condition.hpp"
#include "latentcd/tensor.hpp"

namespace latentcd {

struct DenoiserConfig {
    int latent_dim = 8;
    int content_dim = 4;
    int speaker_dim = 8;
    int f0_embed_dim = 8;
    int t_sin_dim = 16;         // sinusoidal feature count, even
    int t_feat_dim = 16;        // projected timestep feature width
    int width = 128;
    int depth = 2;              // hidden layers
    int schedule_steps = 100;   // T the model was built for (timestep scaling)

    int cond_dim() const { return content_dim + f0_embed_dim + speaker_dim; }
    int input_dim() const { return latent_dim + t_feat_dim + cond_dim(); }
};

// Activation record produced by eval() and consumed by backward(). Only valid
// for the model instance that produced it.
struct EvalCache {
    const void* model_id = nullptr;
    int t = 0;
    bool is_null = false;
    Vec spk;    // effective speaker input (zeros for the null branch)
    Vec t_sin;  // sinusoidal timestep features
    std::vector<int> f0_bins;
    Vec h0;     // network input (latent | t features | condition vector)

    struct LayerCache {
        Vec input;      // activations entering the layer
        Vec xhat;       // normalized pre-activation
        double inv_std = 0.0;
        Vec scale;      // speaker-predicted scale (before the +1)
        Vec s;          // modulated pre-activation fed to the nonlinearity
        Vec out;        // layer output
    };
    std::vector<LayerCache> layers;
};

// Speaker-conditioned layer normalization:
//   (1 + scale_w spk) * norm(h) + shift_w spk
// with norm() the usual zero-mean unit-variance normalization over h.
Vec scln_forward(const Vec& h, const Vec& speaker, const Tensor& scale_w,
                 const Tensor& shift_w);

// Noise-prediction MLP: sinusoidal timestep features with a learned
// projection, mean-pooled F0 bin embeddings, speaker-conditioned layer
// normalization on every hidden layer, SiLU activations, and a learned
// null-condition embedding. The output layer starts at zero, so a fresh
// model predicts zero noise. Gradients are computed by hand in backward().
class DenoiserModel {
public:
    static DenoiserModel init(const DenoiserConfig& cfg, std::uint64_t seed);

    const DenoiserConfig& config() const { return cfg_; }

    // eps_hat(z_t, t, c). Pass a cache to enable backward(). Throws
    // std::invalid_argument on shape errors or t outside 1..T.
    Vec eval(const Vec& z_t, int t, const Condition& c, EvalCache* cache = nullptr) const;

    // Accumulates d loss / d params into grads given d loss / d eps_hat.
    // grads must have the layout of params(); the cache must come from this
    // model instance.
    void backward_accum(const EvalCache& cache, const Vec& grad_out,
                        TensorList& grads) const;
    TensorList backward(const EvalCache& cache, const Vec& grad_out) const;

    TensorList& params() { return params_; }
    const TensorList& params() const { return params_; }
    TensorList zero_grads() const { return zeros_like(params_); }

    std::size_t param_count() const;
    std::uint64_t param_hash() const;  // FNV-1a over raw parameter bytes

private:
    DenoiserModel() = default;

    // Fixed parameter layout indices.
    int idx_tproj_w() const { return 0; }
    int idx_tproj_b() const { return 1; }
    int idx_f0_table() const { return 2; }
    int idx_null_embed() const { return 3; }
    int idx_hidden_w(int l) const { return 4 + 4 * l; }
    int idx_hidden_b(int l) const { return 5 + 4 * l; }
    int idx_scln_scale(int l) const { return 6 + 4 * l; }
    int idx_scln_shift(int l) const { return 7 + 4 * l; }
    int idx_out_w() const { return 4 + 4 * cfg_.depth; }
    int idx_out_b() const { return 5 + 4 * cfg_.depth; }

    Vec timestep_features(int t) const;
    Vec condition_vector(const Condition& c) const;

    DenoiserConfig cfg_;
    TensorList params_;
};

}  // namespace latentcd
