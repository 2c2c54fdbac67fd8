#pragma once

// The full learnable model: block embeddings, similarity embedding and the
// optional classifier head, addressable as a flat list of named tensors so
// the optimizer, checkpoints and the gradient checker share one walk order.

#include <vector>

#include "boardgraph/gradcheck.hpp"
#include "boardgraph/graph.hpp"
#include "boardgraph/similarity.hpp"

namespace boardgraph {

enum class LossKind { Triplet, Bce, CrossEntropy };
enum class ExtraMode { None, Geometry, Label };

const char* to_string(BlockKind k);
const char* to_string(LossKind k);
const char* to_string(ExtraMode m);
BlockKind block_kind_from_string(const std::string& s);
LossKind loss_kind_from_string(const std::string& s);
ExtraMode extra_mode_from_string(const std::string& s);

// Extra dims appended to the visual feature: 0 / 6 geometry / C+1 label.
int extra_feature_dims(ExtraMode mode, int n_categories);

struct ModelParams {
    BlockKind block = BlockKind::None;
    LossKind loss = LossKind::Triplet;
    ExtraMode extra = ExtraMode::None;
    int feature_dim = 0;   // raw visual dimension d
    int node_dim = 0;       // d' = d + extras; all layer shapes derive from it
    int block_depth = 1;    // weight-shared block applications
    std::vector<std::string> categories;

    GNParams gn;            // active when block != None
    SimilarityParams sim;   // phi_d
    LinearParams clf_head;  // active when loss == CrossEntropy

    // Named mutable views over every active tensor, in a fixed order.
    std::vector<ParamView> tensors();
    std::vector<ParamView> tensors() const = delete;
};

ModelParams make_model(BlockKind block, LossKind loss, ExtraMode extra, int feature_dim,
                       const std::vector<std::string>& categories, Rng& rng,
                       int block_depth = 1, SimKind sim_kind = SimKind::Dot);

// Gradient buffers for every active tensor, same order as the model's
// tensors(). Zeroed between optimization steps.
struct GradStore {
    BlockKind block = BlockKind::None;
    LossKind loss = LossKind::Triplet;
    GNGrads gn;
    LinearGrad phi_d;
    LinearGrad clf_head;
    long accumulation_count = 0;

    explicit GradStore(const ModelParams& m)
        : block(m.block), loss(m.loss), gn(m.gn), phi_d(m.sim.phi_d), clf_head(m.clf_head) {}
    void zero();
    std::vector<ParamView> tensors();
};

// End-to-end check of the hand-derived backward pass: a random graph of
// `n_nodes` nodes of dimension `node_dim` runs through the chosen block
// and loss, and every parameter plus every node input is compared against
// central finite differences.
GradcheckReport model_gradcheck(int node_dim, int n_nodes, std::uint64_t seed, BlockKind block,
                                LossKind loss, double eps = 1e-4, int block_depth = 1);

}  // namespace boardgraph
