#include "boardgraph/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace boardgraph {

double Rng::normal() {
    // Box-Muller, cosine branch only. Two uniforms per draw keeps the
    // stream position independent of caller history.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

void init_linear(LinearParams& p, Rng& rng) {
    double bound = 1.0 / std::sqrt(double(p.in_dim()));
    for (auto& w : p.weight.a) w = rng.uniform(-bound, bound);
    std::fill(p.bias.begin(), p.bias.end(), 0.0);
}

Vec linear_apply(const Vec& x, const LinearParams& p) {
    if (int(x.size()) != p.in_dim())
        throw ShapeError("linear_apply: input has length " + std::to_string(x.size()) +
                         ", layer expects " + std::to_string(p.in_dim()));
    Vec y(p.out_dim());
    for (int r = 0; r < p.out_dim(); ++r) {
        const double* wrow = &p.weight.a[std::size_t(r) * p.in_dim()];
        double s = p.bias[r];
        for (int c = 0; c < p.in_dim(); ++c) s += wrow[c] * x[c];
        y[r] = s;
    }
    return y;
}

Vec linear_backward(const Vec& x, const LinearParams& p, const Vec& g, LinearGrad& grad) {
    if (int(x.size()) != p.in_dim() || int(g.size()) != p.out_dim())
        throw ShapeError("linear_backward: shape mismatch");
    Vec dx(p.in_dim(), 0.0);
    for (int r = 0; r < p.out_dim(); ++r) {
        const double gr = g[r];
        grad.bias[r] += gr;
        double* wgrow = &grad.weight.a[std::size_t(r) * p.in_dim()];
        const double* wrow = &p.weight.a[std::size_t(r) * p.in_dim()];
        for (int c = 0; c < p.in_dim(); ++c) {
            wgrow[c] += gr * x[c];
            dx[c] += wrow[c] * gr;
        }
    }
    return dx;
}

Vec elementwise_relu(const Vec& x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Vec relu_backward(const Vec& pre, const Vec& g) {
    Vec dx(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) dx[i] = pre[i] > 0.0 ? g[i] : 0.0;
    return dx;
}

std::vector<std::size_t> content_order(const std::vector<Vec>& xs) {
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(xs[a].begin(), xs[a].end(), xs[b].begin(),
                                            xs[b].end());
    });
    return order;
}

Vec mean_pool(const std::vector<Vec>& xs) {
    if (xs.empty()) throw EmptyGraphError("mean_pool: empty input list");
    for (const auto& x : xs)
        if (x.size() != xs[0].size()) throw ShapeError("mean_pool: ragged input lengths");
    // Summation follows a content-derived order, so the result is exactly
    // invariant under permutations of the input list.
    Vec m(xs[0].size(), 0.0);
    for (std::size_t idx : content_order(xs))
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += xs[idx][i];
    for (auto& v : m) v /= double(xs.size());
    return m;
}

Vec mean_pool_backward(const Vec& g, std::size_t n) {
    Vec dx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] = g[i] / double(n);
    return dx;
}

}  // namespace boardgraph
