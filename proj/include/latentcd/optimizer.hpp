#pragma once

#include <string>

#include "latentcd/tensor.hpp"

namespace latentcd {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

// Plain gradient descent by default; Adam behind the kind switch. apply()
// first scans the gradients and throws DivergenceError on any NaN/Inf before
// touching parameters or moments.
struct Optimizer {
    OptimizerKind kind = OptimizerKind::Sgd;
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    long long step_count = 0;
    TensorList m;  // Adam first moment, lazily shaped on first apply
    TensorList v;  // Adam second moment

    void apply(TensorList& params, const TensorList& grads);
};

}  // namespace latentcd
