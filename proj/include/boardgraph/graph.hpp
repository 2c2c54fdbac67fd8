#pragma once

// Board-conditioned feature refinement blocks. The full block mixes a
// global board embedding, attention-weighted edge aggregates and a residual
// node update; the non-local variant drops the global term. Both come with
// exact hand-derived backward passes.

#include <vector>

#include "boardgraph/linalg.hpp"

namespace boardgraph {

struct NodeMeta {
    std::string board_id;
    std::string instance_id;
    bool is_template = false;
    int category = -1;  // index into the category list, -1 when unlabeled
};

// One board as a dense graph: every component/proposal is a node.
struct BoardGraph {
    std::vector<Vec> node_features;  // all of dimension d'
    std::vector<NodeMeta> meta;      // parallel to node_features (may be empty)

    std::size_t size() const { return node_features.size(); }
};

enum class BlockKind { None, Nlnn, Gn };

// The five learnable embedding functions of the block. For d'-dimensional
// nodes: phi_g, phi_e, psi_1, psi_2 are fc(d' -> d'/2); phi_n maps the
// node/edge/global concatenation back to d'. The non-local variant has no
// phi_g and concatenates node + edge features only. d'/2 rounds down when
// label extras make d' odd.
struct GNParams {
    LinearParams phi_g;
    LinearParams phi_e;
    LinearParams psi_1;
    LinearParams psi_2;
    LinearParams phi_n;
};

struct GNGrads {
    LinearGrad phi_g;
    LinearGrad phi_e;
    LinearGrad psi_1;
    LinearGrad psi_2;
    LinearGrad phi_n;

    explicit GNGrads(const GNParams& p)
        : phi_g(p.phi_g), phi_e(p.phi_e), psi_1(p.psi_1), psi_2(p.psi_2), phi_n(p.phi_n) {}
    void zero() {
        phi_g.zero();
        phi_e.zero();
        psi_1.zero();
        psi_2.zero();
        phi_n.zero();
    }
};

GNParams make_gn_params(BlockKind kind, int node_dim, Rng& rng);

// Pairwise attention weights. w_hat holds the raw dot-product scores,
// w the squared-ReLU normalized rows. Rows whose scores are all <= 0
// normalize to all-zero (the sparse-attention degenerate case).
struct EdgeWeightMatrix {
    Mat w_hat;
    Mat w;
};

EdgeWeightMatrix compute_edge_weights(const BoardGraph& g, const GNParams& p);

// Intermediates saved by the forward pass for the backward pass.
struct BlockCache {
    BlockKind kind = BlockKind::Gn;
    std::vector<Vec> inputs;
    std::vector<Vec> phi_g_embeds;  // per node (full block only)
    Vec global;                     // mean of phi_g_embeds (full block only)
    std::vector<Vec> phi_e_embeds;  // per node
    std::vector<Vec> psi_1_embeds;
    std::vector<Vec> psi_2_embeds;
    EdgeWeightMatrix edges;
    std::vector<Vec> edge_aggregates;  // per node
    std::vector<Vec> concat_inputs;    // phi_n inputs
    std::vector<Vec> pre_activation;   // x_i + phi_n(...)
};

// Full block: x_hat_i = relu(x_i + phi_n(concat(x_i, edge_agg_i, global))).
BoardGraph gn_block_apply(const BoardGraph& g, const GNParams& p, BlockCache* cache = nullptr);

// Non-local variant: same update without the global term.
BoardGraph nlnn_block_apply(const BoardGraph& g, const GNParams& p, BlockCache* cache = nullptr);

// Backward through either block. `d_out` is dL/d(refined node features);
// accumulates embedding gradients into `grads` and returns dL/d(inputs).
std::vector<Vec> block_backward(const BlockCache& cache, const GNParams& p,
                                const std::vector<Vec>& d_out, GNGrads& grads);

// Dispatch on kind; BlockKind::None passes features through untouched.
BoardGraph block_apply(BlockKind kind, const BoardGraph& g, const GNParams& p,
                       BlockCache* cache = nullptr);

// `depth` weight-shared applications of the block (default configuration
// is a single application).
BoardGraph block_apply_stack(BlockKind kind, const BoardGraph& g, const GNParams& p, int depth,
                             std::vector<BlockCache>* caches = nullptr);

// Backward through a stack produced by block_apply_stack.
std::vector<Vec> block_backward_stack(const std::vector<BlockCache>& caches, const GNParams& p,
                                      const std::vector<Vec>& d_out, GNGrads& grads);

}  // namespace boardgraph
