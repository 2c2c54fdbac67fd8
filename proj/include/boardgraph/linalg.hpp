#pragma once

// Dense vector/matrix primitives with hand-derived forward and backward
// rules. The architecture only ever composes fully connected layers, ReLU
// and mean pooling, so each op carries its own gradient rule instead of a
// general autodiff graph.

#include <span>
#include <string>
#include <vector>

#include "boardgraph/common.hpp"

namespace boardgraph {

using Vec = std::vector<double>;

// Row-major dense matrix.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(std::size_t(r) * std::size_t(c), 0.0) {}

    double& operator()(int r, int c) { return a[std::size_t(r) * cols + c]; }
    double operator()(int r, int c) const { return a[std::size_t(r) * cols + c]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

// One fully connected layer: y = weight * x + bias.
struct LinearParams {
    Mat weight;  // out_dim x in_dim
    Vec bias;    // out_dim

    LinearParams() = default;
    LinearParams(int out_dim, int in_dim) : weight(out_dim, in_dim), bias(out_dim, 0.0) {}

    int in_dim() const { return weight.cols; }
    int out_dim() const { return weight.rows; }
    bool empty() const { return weight.rows == 0; }
};

// Gradient buffers mirroring one LinearParams.
struct LinearGrad {
    Mat weight;
    Vec bias;

    LinearGrad() = default;
    explicit LinearGrad(const LinearParams& p)
        : weight(p.out_dim(), p.in_dim()), bias(p.out_dim(), 0.0) {}

    void zero() {
        std::fill(weight.a.begin(), weight.a.end(), 0.0);
        std::fill(bias.begin(), bias.end(), 0.0);
    }
};

// Fan-in uniform init: weight ~ U[-1/sqrt(in), +1/sqrt(in)], bias 0.
void init_linear(LinearParams& p, Rng& rng);

Vec linear_apply(const Vec& x, const LinearParams& p);

// Backward rule for linear_apply. `g` is dL/dy; accumulates dL/dweight and
// dL/dbias into `grad` and returns dL/dx = weight^T * g.
Vec linear_backward(const Vec& x, const LinearParams& p, const Vec& g, LinearGrad& grad);

Vec elementwise_relu(const Vec& x);

// Passes `g` where the pre-activation is > 0; subgradient at 0 is 0.
Vec relu_backward(const Vec& pre, const Vec& g);

// Indices of xs sorted by lexicographic vector comparison; reductions that
// iterate in this order give results independent of the input ordering.
std::vector<std::size_t> content_order(const std::vector<Vec>& xs);

Vec mean_pool(const std::vector<Vec>& xs);

// dL/d(each input) of mean_pool given upstream dL/d(mean).
Vec mean_pool_backward(const Vec& g, std::size_t n);

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw ShapeError("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Mutable view of one named tensor inside a model; SGD, checkpoints and the
// gradient checker all walk the model through these.
struct ParamView {
    std::string name;
    std::span<double> values;
};

}  // namespace boardgraph
