#include "boardgraph/model.hpp"

namespace boardgraph {

const char* to_string(BlockKind k) {
    switch (k) {
        case BlockKind::None: return "none";
        case BlockKind::Nlnn: return "nlnn";
        case BlockKind::Gn: return "gn";
    }
    return "?";
}

const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::Triplet: return "triplet";
        case LossKind::Bce: return "bce";
        case LossKind::CrossEntropy: return "ce";
    }
    return "?";
}

const char* to_string(ExtraMode m) {
    switch (m) {
        case ExtraMode::None: return "none";
        case ExtraMode::Geometry: return "geometry";
        case ExtraMode::Label: return "label";
    }
    return "?";
}

BlockKind block_kind_from_string(const std::string& s) {
    if (s == "none") return BlockKind::None;
    if (s == "nlnn") return BlockKind::Nlnn;
    if (s == "gn") return BlockKind::Gn;
    throw ConfigError("unknown block kind '" + s + "'");
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "triplet") return LossKind::Triplet;
    if (s == "bce") return LossKind::Bce;
    if (s == "ce") return LossKind::CrossEntropy;
    throw ConfigError("unknown loss kind '" + s + "'");
}

ExtraMode extra_mode_from_string(const std::string& s) {
    if (s == "none") return ExtraMode::None;
    if (s == "geometry") return ExtraMode::Geometry;
    if (s == "label") return ExtraMode::Label;
    throw ConfigError("unknown extra-feature mode '" + s + "'");
}

int extra_feature_dims(ExtraMode mode, int n_categories) {
    switch (mode) {
        case ExtraMode::None: return 0;
        case ExtraMode::Geometry: return 6;
        case ExtraMode::Label: return n_categories + 1;
    }
    return 0;
}

namespace {

void push_linear(std::vector<ParamView>& out, const std::string& name, LinearParams& p) {
    out.push_back({name + ".weight", std::span<double>(p.weight.a)});
    out.push_back({name + ".bias", std::span<double>(p.bias)});
}

void push_grad(std::vector<ParamView>& out, const std::string& name, LinearGrad& g) {
    out.push_back({name + ".weight", std::span<double>(g.weight.a)});
    out.push_back({name + ".bias", std::span<double>(g.bias)});
}

}  // namespace

std::vector<ParamView> ModelParams::tensors() {
    std::vector<ParamView> out;
    if (block == BlockKind::Gn) push_linear(out, "phi_g", gn.phi_g);
    if (block != BlockKind::None) {
        push_linear(out, "phi_e", gn.phi_e);
        push_linear(out, "psi_1", gn.psi_1);
        push_linear(out, "psi_2", gn.psi_2);
        push_linear(out, "phi_n", gn.phi_n);
    }
    push_linear(out, "phi_d", sim.phi_d);
    if (loss == LossKind::CrossEntropy) push_linear(out, "clf_head", clf_head);
    return out;
}

std::vector<ParamView> GradStore::tensors() {
    std::vector<ParamView> out;
    if (block == BlockKind::Gn) push_grad(out, "phi_g", gn.phi_g);
    if (block != BlockKind::None) {
        push_grad(out, "phi_e", gn.phi_e);
        push_grad(out, "psi_1", gn.psi_1);
        push_grad(out, "psi_2", gn.psi_2);
        push_grad(out, "phi_n", gn.phi_n);
    }
    push_grad(out, "phi_d", phi_d);
    if (loss == LossKind::CrossEntropy) push_grad(out, "clf_head", clf_head);
    return out;
}

void GradStore::zero() {
    gn.zero();
    phi_d.zero();
    clf_head.zero();
    accumulation_count = 0;
}

GradcheckReport model_gradcheck(int node_dim, int n_nodes, std::uint64_t seed, BlockKind block,
                                LossKind loss, double eps, int block_depth) {
    if (n_nodes < 4) throw ConfigError("gradcheck: need at least 4 nodes");
    Rng rng(seed);
    const int n_cats = n_nodes >= 6 ? 3 : 2;
    std::vector<std::string> categories;
    for (int c = 0; c < n_cats; ++c) categories.push_back(std::string(1, char('a' + c)));
    ModelParams model =
        make_model(block, loss, ExtraMode::None, node_dim, categories, rng, block_depth);

    BoardGraph g;
    g.node_features.assign(std::size_t(n_nodes), Vec(std::size_t(node_dim)));
    std::vector<int> cats(std::size_t(n_nodes), 0);
    for (int i = 0; i < n_nodes; ++i) {
        for (auto& v : g.node_features[i]) v = 0.5 * rng.normal();
        cats[std::size_t(i)] = i % n_cats;
    }

    auto forward = [&]() {
        BoardGraph refined = block_apply_stack(block, g, model.gn, model.block_depth);
        TripletBatch batch;
        batch.features = refined.node_features;
        batch.categories = cats;
        batch.margin = 1.0;
        switch (loss) {
            case LossKind::Triplet: return triplet_loss(batch, model.sim).loss;
            case LossKind::Bce: return bce_pair_loss(batch, model.sim).loss;
            case LossKind::CrossEntropy: return classifier_head_loss(batch, model.clf_head).loss;
        }
        return 0.0;
    };

    // Analytic gradients at the base point.
    GradStore grads(model);
    grads.zero();
    std::vector<BlockCache> caches;
    BoardGraph refined = block_apply_stack(block, g, model.gn, model.block_depth, &caches);
    TripletBatch batch;
    batch.features = refined.node_features;
    batch.categories = cats;
    batch.margin = 1.0;
    std::vector<Vec> d_features;
    LossGrads lg;
    lg.d_features = &d_features;
    lg.d_phi = &grads.phi_d;
    lg.d_head = &grads.clf_head;
    switch (loss) {
        case LossKind::Triplet: triplet_loss(batch, model.sim, lg); break;
        case LossKind::Bce: bce_pair_loss(batch, model.sim, lg); break;
        case LossKind::CrossEntropy: classifier_head_loss(batch, model.clf_head, lg); break;
    }
    std::vector<Vec> d_inputs = block != BlockKind::None
                                     ? block_backward_stack(caches, model.gn, d_features, grads.gn)
                                     : d_features;

    std::vector<ParamView> views = model.tensors();
    std::vector<double> analytic;
    for (const auto& view : grads.tensors())
        analytic.insert(analytic.end(), view.values.begin(), view.values.end());
    for (int i = 0; i < n_nodes; ++i) {
        views.push_back({"node" + std::to_string(i), std::span<double>(g.node_features[i])});
        analytic.insert(analytic.end(), d_inputs[std::size_t(i)].begin(),
                        d_inputs[std::size_t(i)].end());
    }
    return finite_difference_gradcheck(forward, views, analytic, eps);
}

ModelParams make_model(BlockKind block, LossKind loss, ExtraMode extra, int feature_dim,
                       const std::vector<std::string>& categories, Rng& rng, int block_depth,
                       SimKind sim_kind) {
    if (block_depth < 1) throw ConfigError("model: block depth must be at least 1");
    ModelParams m;
    m.block = block;
    m.loss = loss;
    m.extra = extra;
    m.feature_dim = feature_dim;
    m.categories = categories;
    m.block_depth = block_depth;
    m.sim.kind = sim_kind;
    m.node_dim = feature_dim + extra_feature_dims(extra, int(categories.size()));
    if (m.node_dim < 2) throw ConfigError("model: node dimension must be at least 2");
    m.gn = make_gn_params(block, m.node_dim, rng);
    m.sim.phi_d = LinearParams(m.node_dim / 2, m.node_dim);
    init_linear(m.sim.phi_d, rng);
    if (loss == LossKind::CrossEntropy) {
        m.clf_head = LinearParams(int(categories.size()), m.node_dim);
        init_linear(m.clf_head, rng);
    }
    return m;
}

}  // namespace boardgraph
