#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace latentcd {

using Vec = std::vector<double>;

// Named dense array of doubles, row-major. Rank is 1 or 2 everywhere in this
// project; higher ranks round-trip through the checkpoint container but have
// no algebra helpers.
struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    Vec data;

    static Tensor zeros(std::string name, std::vector<std::size_t> shape);

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
};

using TensorList = std::vector<Tensor>;

TensorList zeros_like(const TensorList& ref);

// out = W x            W: [rows x cols], x: [cols], out: [rows]
void matvec(const Tensor& w, std::span<const double> x, std::span<double> out);
// out += W^T g         (pull a gradient back through matvec)
void matvec_t_accum(const Tensor& w, std::span<const double> g, std::span<double> out);
// W += g (outer) x     (gradient of matvec with respect to W)
void outer_accum(Tensor& w, std::span<const double> g, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

bool all_finite(const Vec& v);
bool all_finite(const TensorList& ts);

}  // namespace latentcd
