#include "boardgraph/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "boardgraph/io.hpp"
#include "json.hpp"

namespace boardgraph {

using nlohmann::json;

void sgd_update(ModelParams& params, GradStore& grads, OptimState& state) {
    auto pviews = params.tensors();
    auto gviews = grads.tensors();
    if (pviews.size() != gviews.size()) throw ShapeError("sgd_update: grad/param tensor mismatch");

    double norm2 = 0.0;
    for (std::size_t t = 0; t < pviews.size(); ++t) {
        if (pviews[t].values.size() != gviews[t].values.size())
            throw ShapeError("sgd_update: shape mismatch at " + pviews[t].name);
        for (double g : gviews[t].values) {
            if (!std::isfinite(g))
                throw NumericError("sgd_update: non-finite gradient in " + pviews[t].name +
                                   "; step aborted");
            norm2 += g * g;
        }
    }

    // Global-norm clip keeps the attention path from blowing up a step.
    double clip = 1.0;
    if (state.max_grad_norm > 0.0 && norm2 > state.max_grad_norm * state.max_grad_norm)
        clip = state.max_grad_norm / std::sqrt(norm2);

    for (std::size_t t = 0; t < pviews.size(); ++t) {
        Vec& v = state.velocity[pviews[t].name];
        if (v.size() != pviews[t].values.size()) v.assign(pviews[t].values.size(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double g = clip * gviews[t].values[i] + state.weight_decay * pviews[t].values[i];
            v[i] = state.momentum * v[i] + g;
            pviews[t].values[i] -= state.lr * v[i];
        }
    }
}

void plateau_lr_schedule(OptimState& state, double epoch_eval_accuracy) {
    if (epoch_eval_accuracy < 0.0 || epoch_eval_accuracy > 1.0)
        throw ConfigError("scheduler: accuracy must be in [0,1]");
    if (epoch_eval_accuracy > state.best_accuracy) {
        state.best_accuracy = epoch_eval_accuracy;
        state.epochs_since_improvement = 0;
        return;
    }
    ++state.epochs_since_improvement;
    if (state.epochs_since_improvement >= state.plateau_patience) {
        state.lr *= state.plateau_factor;
        state.epochs_since_improvement = 0;
    }
}

namespace {

// Designate one random instance per distinct batch category as the
// labeled template for label-mode extras, mirroring the test-time graph
// of queries plus a few labeled nodes.
std::vector<bool> pick_batch_templates(const Episode& ep, Rng& rng) {
    std::vector<bool> is_template(ep.features.size(), false);
    std::map<int, std::vector<std::size_t>> slots;
    for (std::size_t i = 0; i < ep.categories.size(); ++i) slots[ep.categories[i]].push_back(i);
    for (const auto& [cat, members] : slots)
        is_template[members[rng.uniform_index(members.size())]] = true;
    return is_template;
}

}  // namespace

TrainResult run_training(const std::vector<BoardRecord>& dataset, const Fold& fold,
                         const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.n_way < 1 || cfg.k_shot < 1)
        throw ConfigError("train: counts must be positive");
    if (cfg.margin <= 0.0) throw ConfigError("train: margin must be positive");

    std::map<std::string, const BoardRecord*> by_id;
    for (const auto& b : dataset) by_id[b.board_id] = &b;
    std::vector<BoardRecord> train_boards;
    for (const auto& id : fold.train) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ConfigError("train: unknown board '" + id + "' in split");
        train_boards.push_back(*it->second);
    }
    if (train_boards.empty()) throw ConfigError("train: empty training fold");

    const CategoryIndex cats = CategoryIndex::from_boards(train_boards);
    if (cats.size() < 2 && cfg.loss != LossKind::CrossEntropy)
        throw DegenerateBatchError("train: triplet/bce need at least 2 categories, found " +
                                   std::to_string(cats.size()));
    const int d = train_boards[0].feature_dim();
    if (d <= 0) throw ConfigError("train: training boards carry no features");

    Rng master(cfg.seed);

    // Validation holdout for the scheduler signal.
    std::vector<std::size_t> order(train_boards.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[master.uniform_index(i)]);
    std::size_t n_val = train_boards.size() >= 2
                            ? std::max<std::size_t>(
                                  1, std::size_t(std::llround(cfg.val_fraction *
                                                              double(train_boards.size()))))
                            : 0;
    if (n_val >= train_boards.size()) n_val = train_boards.size() - 1;
    std::vector<BoardRecord> opt_boards, val_boards;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < order.size() - n_val) opt_boards.push_back(train_boards[order[i]]);
        else val_boards.push_back(train_boards[order[i]]);
    }
    if (val_boards.empty()) val_boards = opt_boards;  // single-board degenerate case

    // Jitter scale: a fraction of the per-dim feature spread.
    Vec jitter;
    if (cfg.jitter_scale > 0.0) {
        jitter = per_dim_feature_std(opt_boards);
        for (auto& s : jitter) s *= cfg.jitter_scale;
    }

    ModelParams model = make_model(cfg.block, cfg.loss, cfg.extra, d, cats.names, master,
                                   cfg.block_depth, cfg.similarity);
    OptimState optim;
    optim.lr = cfg.lr;
    optim.momentum = cfg.momentum;
    optim.weight_decay = cfg.weight_decay;
    optim.max_grad_norm = cfg.max_grad_norm;
    optim.plateau_patience = cfg.plateau_patience;
    optim.plateau_factor = cfg.plateau_factor;

    Rng sample_rng = master.fork();
    Rng eval_rng_base = master.fork();

    const int iterations = cfg.iterations_per_epoch > 0 ? cfg.iterations_per_epoch
                                                        : int(opt_boards.size());
    const int C = cats.size();

    TrainResult result;
    double best_val = -1.0;
    GradStore grads(model);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        const double epoch_lr = optim.lr;
        for (int iter = 0; iter < iterations; ++iter) {
            // Within-mode boards may hold a single category; retry a few
            // draws before giving up.
            Episode ep;
            bool ok = false;
            for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
                ep = sample_training_batch(opt_boards, cfg.batching, cfg.n_way, cfg.k_shot, jitter,
                                           cats, sample_rng);
                std::set<int> distinct(ep.categories.begin(), ep.categories.end());
                ok = cfg.loss == LossKind::CrossEntropy || distinct.size() >= 2;
            }
            if (!ok)
                throw DegenerateBatchError("train: could not sample a batch with 2 categories");

            // Extra features, then the block.
            std::vector<bool> is_template(ep.features.size(), false);
            if (cfg.extra == ExtraMode::Label) is_template = pick_batch_templates(ep, sample_rng);
            BoardGraph g;
            g.node_features.resize(ep.features.size());
            for (std::size_t i = 0; i < ep.features.size(); ++i) {
                const auto& board = opt_boards[std::size_t(ep.items[i].board)];
                const auto& inst = board.instances[std::size_t(ep.items[i].instance)];
                g.node_features[i] =
                    augment_node_features(ep.features[i], cfg.extra, &inst.bbox, board.width,
                                          board.height, is_template[i], ep.categories[i], C);
            }

            std::vector<BlockCache> caches;
            BoardGraph refined = block_apply_stack(cfg.block, g, model.gn, model.block_depth,
                                                   &caches);

            TripletBatch batch;
            batch.features = refined.node_features;
            batch.categories = ep.categories;
            batch.board_ids = ep.board_ids;
            batch.margin = cfg.margin;

            grads.zero();
            std::vector<Vec> d_features;
            LossGrads lg;
            lg.d_features = &d_features;
            LossReport report;
            switch (cfg.loss) {
                case LossKind::Triplet:
                    lg.d_phi = &grads.phi_d;
                    report = triplet_loss(batch, model.sim, lg);
                    break;
                case LossKind::Bce:
                    lg.d_phi = &grads.phi_d;
                    report = bce_pair_loss(batch, model.sim, lg);
                    break;
                case LossKind::CrossEntropy:
                    lg.d_head = &grads.clf_head;
                    report = classifier_head_loss(batch, model.clf_head, lg);
                    break;
            }
            loss_sum += report.loss;
            if (cfg.block != BlockKind::None)
                block_backward_stack(caches, model.gn, d_features, grads.gn);
            ++grads.accumulation_count;
            sgd_update(model, grads, optim);
        }

        // Scheduler signal: top-1 on the held-out boards with on-board
        // random templates.
        Rng eval_rng = eval_rng_base.fork();
        EvalReport val = evaluate_classification(val_boards, opt_boards, model,
                                                 TemplateStrategy::RandomOnBoard, eval_rng);
        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = iterations > 0 ? loss_sum / double(iterations) : 0.0;
        stats.eval_top1 = val.top1;
        stats.lr = epoch_lr;
        result.log.push_back(stats);

        if (val.top1 > best_val) {
            best_val = val.top1;
            result.best_params = model;
        }
        plateau_lr_schedule(optim, val.top1);
    }

    result.params = std::move(model);
    result.optim = std::move(optim);
    if (result.best_params.categories.empty()) result.best_params = result.params;
    return result;
}

std::string metrics_csv(const std::vector<EpochStats>& log) {
    std::string out = "epoch,loss,eval_top1,lr\n";
    char buf[160];
    for (const auto& s : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", s.epoch, s.loss, s.eval_top1,
                      s.lr);
        out += buf;
    }
    return out;
}

void save_checkpoint(const ModelParams& params, const OptimState& optim, std::uint64_t seed,
                     const std::filesystem::path& path) {
    json j;
    j["version"] = 1;
    j["feature_dim"] = params.feature_dim;
    j["extra_mode"] = to_string(params.extra);
    j["block"] = to_string(params.block);
    j["block_depth"] = params.block_depth;
    j["loss"] = to_string(params.loss);
    j["similarity"] = params.sim.kind == SimKind::Dot ? "dot" : "cosine";
    j["categories"] = params.categories;
    j["seed"] = seed;

    json tensors;
    auto put = [&](const std::string& name, const LinearParams& p) {
        if (p.empty()) return;
        tensors[name + ".weight"] =
            json{{"shape", {p.out_dim(), p.in_dim()}}, {"data", p.weight.a}};
        tensors[name + ".bias"] = json{{"shape", {p.out_dim()}}, {"data", p.bias}};
    };
    put("phi_g", params.gn.phi_g);
    put("phi_e", params.gn.phi_e);
    put("psi_1", params.gn.psi_1);
    put("psi_2", params.gn.psi_2);
    put("phi_n", params.gn.phi_n);
    put("phi_d", params.sim.phi_d);
    put("clf_head", params.clf_head);
    j["params"] = tensors;

    json opt;
    opt["lr"] = optim.lr;
    opt["momentum"] = optim.momentum;
    opt["weight_decay"] = optim.weight_decay;
    opt["max_grad_norm"] = optim.max_grad_norm;
    opt["plateau_patience"] = optim.plateau_patience;
    opt["plateau_factor"] = optim.plateau_factor;
    opt["epochs_since_improvement"] = optim.epochs_since_improvement;
    opt["best_accuracy"] = optim.best_accuracy;
    json vel;
    for (const auto& [name, v] : optim.velocity) vel[name] = v;
    opt["velocity"] = vel;
    j["optim"] = opt;

    write_text_atomic(path, j.dump(1));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw ParseError("checkpoint " + path.string() + ": " + e.what());
    }
    if (j.value("version", 0) != 1)
        throw ParseError("checkpoint " + path.string() + ": unsupported version");

    Checkpoint ck;
    try {
        ck.params.feature_dim = j.at("feature_dim").get<int>();
        ck.params.extra = extra_mode_from_string(j.at("extra_mode").get<std::string>());
        ck.params.block = block_kind_from_string(j.at("block").get<std::string>());
        ck.params.block_depth = j.value("block_depth", 1);
        ck.params.loss = loss_kind_from_string(j.at("loss").get<std::string>());
        ck.params.sim.kind = j.value("similarity", "dot") == "cosine" ? SimKind::Cosine : SimKind::Dot;
        ck.params.categories = j.at("categories").get<std::vector<std::string>>();
        ck.seed = j.at("seed").get<std::uint64_t>();
        ck.params.node_dim =
            ck.params.feature_dim +
            extra_feature_dims(ck.params.extra, int(ck.params.categories.size()));

        const json& tensors = j.at("params");
        auto get = [&](const std::string& name, LinearParams& p) {
            if (!tensors.contains(name + ".weight")) return;
            const json& w = tensors[name + ".weight"];
            p = LinearParams(w.at("shape")[0].get<int>(), w.at("shape")[1].get<int>());
            p.weight.a = w.at("data").get<Vec>();
            p.bias = tensors.at(name + ".bias").at("data").get<Vec>();
            if (int(p.weight.a.size()) != p.out_dim() * p.in_dim() ||
                int(p.bias.size()) != p.out_dim())
                throw ParseError("checkpoint: tensor size does not match its shape");
        };
        get("phi_g", ck.params.gn.phi_g);
        get("phi_e", ck.params.gn.phi_e);
        get("psi_1", ck.params.gn.psi_1);
        get("psi_2", ck.params.gn.psi_2);
        get("phi_n", ck.params.gn.phi_n);
        get("phi_d", ck.params.sim.phi_d);
        get("clf_head", ck.params.clf_head);

        const json& opt = j.at("optim");
        ck.optim.lr = opt.at("lr").get<double>();
        ck.optim.momentum = opt.at("momentum").get<double>();
        ck.optim.weight_decay = opt.at("weight_decay").get<double>();
        ck.optim.max_grad_norm = opt.value("max_grad_norm", 5.0);
        ck.optim.plateau_patience = opt.value("plateau_patience", 50);
        ck.optim.plateau_factor = opt.value("plateau_factor", 0.5);
        ck.optim.epochs_since_improvement = opt.value("epochs_since_improvement", 0);
        ck.optim.best_accuracy = opt.value("best_accuracy", 0.0);
        if (opt.contains("velocity"))
            for (const auto& [name, v] : opt["velocity"].items())
                ck.optim.velocity[name] = v.get<Vec>();
    } catch (const json::exception& e) {
        throw ParseError("checkpoint " + path.string() + ": " + e.what());
    }
    return ck;
}

}  // namespace boardgraph
