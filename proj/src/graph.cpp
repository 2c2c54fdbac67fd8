#include "boardgraph/graph.hpp"

#include <cmath>

namespace boardgraph {

namespace {

void check_graph(const BoardGraph& g, const GNParams& p) {
    if (g.node_features.empty()) throw EmptyGraphError("block: graph has no nodes");
    const std::size_t d = g.node_features[0].size();
    for (const auto& x : g.node_features)
        if (x.size() != d) throw ShapeError("block: node features have mixed dimensions");
    if (int(d) != p.psi_1.in_dim())
        throw ShapeError("block: node dimension " + std::to_string(d) +
                         " does not match parameter dimension " + std::to_string(p.psi_1.in_dim()));
}

}  // namespace

GNParams make_gn_params(BlockKind kind, int node_dim, Rng& rng) {
    if (kind == BlockKind::None) return {};
    if (node_dim < 2)
        throw ConfigError("block: node dimension must be at least 2, got " +
                          std::to_string(node_dim));
    // Embedding width d'/2, rounded down when label extras make d' odd.
    const int half = node_dim / 2;
    GNParams p;
    p.phi_e = LinearParams(half, node_dim);
    p.psi_1 = LinearParams(half, node_dim);
    p.psi_2 = LinearParams(half, node_dim);
    if (kind == BlockKind::Gn) {
        p.phi_g = LinearParams(half, node_dim);
        p.phi_n = LinearParams(node_dim, node_dim + 2 * half);
    } else {
        p.phi_n = LinearParams(node_dim, node_dim + half);
    }
    init_linear(p.phi_e, rng);
    init_linear(p.psi_1, rng);
    init_linear(p.psi_2, rng);
    if (kind == BlockKind::Gn) init_linear(p.phi_g, rng);
    init_linear(p.phi_n, rng);
    // Damp the residual branch so the block starts close to the identity
    // and cannot scramble upstream features before it has learned anything.
    for (auto& w : p.phi_n.weight.a) w *= 0.1;
    return p;
}

namespace {

// Node-indexed reductions iterate in a content-derived order so results
// are exactly invariant under node permutations.
EdgeWeightMatrix edge_weights_impl(const BoardGraph& g, const GNParams& p,
                                   const std::vector<std::size_t>& order, std::vector<Vec>& a,
                                   std::vector<Vec>& b) {
    const int n = int(g.size());
    EdgeWeightMatrix ew;
    ew.w_hat = Mat(n, n);
    ew.w = Mat(n, n);

    a.resize(n);
    b.resize(n);
    for (int i = 0; i < n; ++i) {
        a[i] = linear_apply(g.node_features[i], p.psi_1);
        b[i] = linear_apply(g.node_features[i], p.psi_2);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = dot(a[i], b[j]);  // self-edges included
            ew.w_hat(i, j) = s;
            double r = s > 0.0 ? s : 0.0;
            ew.w(i, j) = r * r;
        }
        double denom = 0.0;
        for (std::size_t j : order) denom += ew.w(i, int(j));
        if (denom > 0.0) {
            for (int j = 0; j < n; ++j) ew.w(i, j) /= denom;
        }
        // all scores <= 0: row stays all-zero
    }
    return ew;
}

}  // namespace

EdgeWeightMatrix compute_edge_weights(const BoardGraph& g, const GNParams& p) {
    check_graph(g, p);
    std::vector<Vec> a, b;
    return edge_weights_impl(g, p, content_order(g.node_features), a, b);
}

namespace {

BoardGraph block_forward(BlockKind kind, const BoardGraph& g, const GNParams& p,
                         BlockCache* cache) {
    check_graph(g, p);
    const int n = int(g.size());
    const int d = int(g.node_features[0].size());
    const int half = d / 2;

    BlockCache local;
    BlockCache& c = cache ? *cache : local;
    c = BlockCache{};
    c.kind = kind;
    c.inputs = g.node_features;

    const std::vector<std::size_t> order = content_order(g.node_features);

    if (kind == BlockKind::Gn) {
        c.phi_g_embeds.resize(n);
        for (int i = 0; i < n; ++i) c.phi_g_embeds[i] = linear_apply(g.node_features[i], p.phi_g);
        c.global = mean_pool(c.phi_g_embeds);
    }

    c.edges = edge_weights_impl(g, p, order, c.psi_1_embeds, c.psi_2_embeds);
    c.phi_e_embeds.resize(n);
    for (int j = 0; j < n; ++j) c.phi_e_embeds[j] = linear_apply(g.node_features[j], p.phi_e);

    c.edge_aggregates.assign(n, Vec(half, 0.0));
    for (int i = 0; i < n; ++i) {
        Vec& agg = c.edge_aggregates[i];
        for (std::size_t jo : order) {
            const int j = int(jo);
            const double w = c.edges.w(i, j);
            if (w == 0.0) continue;
            const Vec& e = c.phi_e_embeds[j];
            for (int k = 0; k < half; ++k) agg[k] += w * e[k];
        }
    }

    BoardGraph out;
    out.meta = g.meta;
    out.node_features.resize(n);
    c.concat_inputs.resize(n);
    c.pre_activation.resize(n);
    for (int i = 0; i < n; ++i) {
        Vec cat;
        cat.reserve(kind == BlockKind::Gn ? 2 * d : d + half);
        cat.insert(cat.end(), g.node_features[i].begin(), g.node_features[i].end());
        cat.insert(cat.end(), c.edge_aggregates[i].begin(), c.edge_aggregates[i].end());
        if (kind == BlockKind::Gn) cat.insert(cat.end(), c.global.begin(), c.global.end());
        Vec h = linear_apply(cat, p.phi_n);
        Vec pre(d);
        for (int k = 0; k < d; ++k) pre[k] = g.node_features[i][k] + h[k];
        out.node_features[i] = elementwise_relu(pre);
        c.concat_inputs[i] = std::move(cat);
        c.pre_activation[i] = std::move(pre);
    }
    return out;
}

}  // namespace

BoardGraph gn_block_apply(const BoardGraph& g, const GNParams& p, BlockCache* cache) {
    return block_forward(BlockKind::Gn, g, p, cache);
}

BoardGraph nlnn_block_apply(const BoardGraph& g, const GNParams& p, BlockCache* cache) {
    return block_forward(BlockKind::Nlnn, g, p, cache);
}

BoardGraph block_apply(BlockKind kind, const BoardGraph& g, const GNParams& p, BlockCache* cache) {
    if (kind == BlockKind::None) {
        if (g.node_features.empty()) throw EmptyGraphError("block: graph has no nodes");
        if (cache) {
            *cache = BlockCache{};
            cache->kind = BlockKind::None;
            cache->inputs = g.node_features;
        }
        return g;
    }
    return block_forward(kind, g, p, cache);
}

BoardGraph block_apply_stack(BlockKind kind, const BoardGraph& g, const GNParams& p, int depth,
                             std::vector<BlockCache>* caches) {
    if (depth < 1) throw ConfigError("block: depth must be at least 1");
    if (caches) caches->assign(std::size_t(depth), BlockCache{});
    if (kind == BlockKind::None) {
        return block_apply(kind, g, p, caches ? &(*caches)[0] : nullptr);
    }
    BoardGraph out = g;
    for (int level = 0; level < depth; ++level)
        out = block_apply(kind, out, p, caches ? &(*caches)[std::size_t(level)] : nullptr);
    return out;
}

std::vector<Vec> block_backward_stack(const std::vector<BlockCache>& caches, const GNParams& p,
                                      const std::vector<Vec>& d_out, GNGrads& grads) {
    if (caches.empty()) throw ConfigError("block_backward_stack: no caches");
    std::vector<Vec> d = d_out;
    for (std::size_t level = caches.size(); level-- > 0;)
        d = block_backward(caches[level], p, d, grads);
    return d;
}

std::vector<Vec> block_backward(const BlockCache& cache, const GNParams& p,
                                const std::vector<Vec>& d_out, GNGrads& grads) {
    const int n = int(cache.inputs.size());
    if (int(d_out.size()) != n) throw ShapeError("block_backward: upstream gradient count");
    if (cache.kind == BlockKind::None) return d_out;

    const int d = int(cache.inputs[0].size());
    const int half = d / 2;
    std::vector<Vec> dx(n, Vec(d, 0.0));

    // Through the residual ReLU update and phi_n.
    std::vector<Vec> d_agg(n, Vec(half, 0.0));
    Vec d_global(cache.kind == BlockKind::Gn ? half : 0, 0.0);
    for (int i = 0; i < n; ++i) {
        Vec d_pre = relu_backward(cache.pre_activation[i], d_out[i]);
        for (int k = 0; k < d; ++k) dx[i][k] += d_pre[k];  // residual path
        Vec d_cat = linear_backward(cache.concat_inputs[i], p.phi_n, d_pre, grads.phi_n);
        for (int k = 0; k < d; ++k) dx[i][k] += d_cat[k];
        for (int k = 0; k < half; ++k) d_agg[i][k] = d_cat[d + k];
        if (cache.kind == BlockKind::Gn)
            for (int k = 0; k < half; ++k) d_global[k] += d_cat[d + half + k];
    }

    // Global feature: shared mean over phi_g embeddings.
    if (cache.kind == BlockKind::Gn) {
        Vec d_embed = mean_pool_backward(d_global, std::size_t(n));
        for (int i = 0; i < n; ++i) {
            Vec dxi = linear_backward(cache.inputs[i], p.phi_g, d_embed, grads.phi_g);
            for (int k = 0; k < d; ++k) dx[i][k] += dxi[k];
        }
    }

    // Edge aggregates: agg_i = sum_j w_ij * e_j.
    const Mat& w = cache.edges.w;
    const Mat& w_hat = cache.edges.w_hat;
    std::vector<Vec> d_e(n, Vec(half, 0.0));
    Mat d_w(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec& e = cache.phi_e_embeds[j];
            double dwij = 0.0;
            const double wij = w(i, j);
            for (int k = 0; k < half; ++k) {
                d_e[j][k] += wij * d_agg[i][k];
                dwij += e[k] * d_agg[i][k];
            }
            d_w(i, j) = dwij;
        }
    }

    // Squared-ReLU row normalization: w_ij = r_ij^2 / sum_k r_ik^2.
    // dL/dr_ij = (2 r_ij / S_i) * (dL/dw_ij - sum_k dL/dw_ik * w_ik).
    Mat d_w_hat(n, n);
    for (int i = 0; i < n; ++i) {
        double denom = 0.0;
        double mix = 0.0;
        for (int j = 0; j < n; ++j) {
            double r = w_hat(i, j) > 0.0 ? w_hat(i, j) : 0.0;
            denom += r * r;
            mix += d_w(i, j) * w(i, j);
        }
        if (denom <= 0.0) continue;  // all-zero row carries no gradient
        for (int j = 0; j < n; ++j) {
            double wh = w_hat(i, j);
            if (wh <= 0.0) continue;
            d_w_hat(i, j) = (2.0 * wh / denom) * (d_w(i, j) - mix);
        }
    }

    // w_hat_ij = <psi_1(x_i), psi_2(x_j)>.
    const std::vector<Vec>& a = cache.psi_1_embeds;
    const std::vector<Vec>& b = cache.psi_2_embeds;
    std::vector<Vec> d_a(n, Vec(half, 0.0)), d_b(n, Vec(half, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double dwh = d_w_hat(i, j);
            if (dwh == 0.0) continue;
            for (int k = 0; k < half; ++k) {
                d_a[i][k] += dwh * b[j][k];
                d_b[j][k] += dwh * a[i][k];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        Vec dxi = linear_backward(cache.inputs[i], p.psi_1, d_a[i], grads.psi_1);
        for (int k = 0; k < d; ++k) dx[i][k] += dxi[k];
        dxi = linear_backward(cache.inputs[i], p.psi_2, d_b[i], grads.psi_2);
        for (int k = 0; k < d; ++k) dx[i][k] += dxi[k];
        dxi = linear_backward(cache.inputs[i], p.phi_e, d_e[i], grads.phi_e);
        for (int k = 0; k < d; ++k) dx[i][k] += dxi[k];
    }
    return dx;
}

}  // namespace boardgraph
