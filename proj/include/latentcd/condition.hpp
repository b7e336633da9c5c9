#pragma once

#include <vector>

#include "latentcd/tensor.hpp"

namespace latentcd {

// Conditioning bundle for the noise predictor: content features, quantized
// log-F0 bin indices (one per frame), and a speaker embedding. When is_null
// is set, a learned null embedding replaces the whole bundle and the other
// fields are ignored (classifier-free guidance's unconditional branch).
struct Condition {
    Vec content;
    std::vector<int> f0_bins;
    Vec speaker;
    bool is_null = false;

    static Condition null_condition() {
        Condition c;
        c.is_null = true;
        return c;
    }
};

}  // namespace latentcd
