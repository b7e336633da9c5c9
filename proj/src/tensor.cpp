#include "latentcd/tensor.hpp"

#include <cmath>
#include <cstddef>

namespace latentcd {

Tensor Tensor::zeros(std::string name, std::vector<std::size_t> shape) {
    Tensor t;
    t.name = std::move(name);
    t.shape = std::move(shape);
    std::size_t n = 1;
    for (auto d : t.shape) n *= d;
    t.data.assign(n, 0.0);
    return t;
}

TensorList zeros_like(const TensorList& ref) {
    TensorList out;
    out.reserve(ref.size());
    for (const auto& t : ref) out.push_back(Tensor::zeros(t.name, t.shape));
    return out;
}

void matvec(const Tensor& w, std::span<const double> x, std::span<double> out) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    const double* wd = w.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = wd + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

void matvec_t_accum(const Tensor& w, std::span<const double> g, std::span<double> out) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    const double* wd = w.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        const double* row = wd + r * cols;
        for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * gr;
    }
}

void outer_accum(Tensor& w, std::span<const double> g, std::span<const double> x) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    double* wd = w.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        double* row = wd + r * cols;
        for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool all_finite(const TensorList& ts) {
    for (const auto& t : ts) {
        if (!all_finite(t.data)) return false;
    }
    return true;
}

}  // namespace latentcd
