#include "latentcd/optimizer.hpp"

#include <cmath>

#include "latentcd/errors.hpp"

namespace latentcd {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    throw ConfigError("optimizer: unknown kind '" + s + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::Sgd ? "sgd" : "adam";
}

void Optimizer::apply(TensorList& params, const TensorList& grads) {
    if (params.size() != grads.size()) {
        throw ConfigError("optimizer: parameter/gradient list mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) {
            throw ConfigError("optimizer: tensor shape mismatch at '" + params[i].name + "'");
        }
    }
    // Divergence is detected before any mutation, so a throw leaves the
    // parameters and moments exactly as they were.
    if (!all_finite(grads)) {
        throw DivergenceError("optimizer: non-finite gradient");
    }

    if (kind == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            for (std::size_t j = 0; j < params[i].size(); ++j) {
                params[i].data[j] -= lr * grads[i].data[j];
            }
        }
        ++step_count;
        return;
    }

    if (m.empty()) {
        m = zeros_like(params);
        v = zeros_like(params);
    }
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, double(step_count));
    const double bc2 = 1.0 - std::pow(beta2, double(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            const double g = grads[i].data[j];
            double& mi = m[i].data[j];
            double& vi = v[i].data[j];
            mi = beta1 * mi + (1.0 - beta1) * g;
            vi = beta2 * vi + (1.0 - beta2) * g * g;
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            params[i].data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace latentcd
