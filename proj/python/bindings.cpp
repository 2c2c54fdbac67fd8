// Python bindings for the main operations: dataset generation, splits,
// training, evaluation and the gradient checker.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "boardgraph/evaluator.hpp"
#include "boardgraph/io.hpp"
#include "boardgraph/trainer.hpp"

namespace py = pybind11;
namespace bg = boardgraph;

namespace {

std::vector<bg::BoardRecord> fold_boards(const std::vector<bg::BoardRecord>& all,
                                         const std::vector<std::string>& ids) {
    std::map<std::string, const bg::BoardRecord*> by_id;
    for (const auto& b : all) by_id[b.board_id] = &b;
    std::vector<bg::BoardRecord> out;
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw bg::ConfigError("split references unknown board '" + id + "'");
        out.push_back(*it->second);
    }
    return out;
}

const bg::Fold& fold_at(const bg::SplitConfig& split, int fold) {
    if (fold < 0 || fold >= int(split.folds.size()))
        throw bg::ConfigError("fold index out of range");
    return split.folds[std::size_t(fold)];
}

int generate_dataset(const std::string& out_dir, int boards, int classes, int dim, int instances,
                     double sigma_board, double sigma_inst, double power,
                     double proto_correlation, double family_correlation, int family_size,
                     double feature_scale, double gain_min, double gain_max, double bias_min,
                     double bias_max, const std::string& proposals, std::uint64_t seed) {
    bg::SyntheticConfig cfg;
    cfg.n_boards = boards;
    cfg.n_categories = classes;
    cfg.feature_dim = dim;
    cfg.instances_per_board = instances;
    cfg.sigma_board = sigma_board;
    cfg.sigma_inst = sigma_inst;
    cfg.power_exponent = power;
    cfg.proto_correlation = proto_correlation;
    cfg.family_correlation = family_correlation;
    cfg.family_size = family_size;
    cfg.feature_scale = feature_scale;
    cfg.gain_min = gain_min;
    cfg.gain_max = gain_max;
    cfg.bias_min = bias_min;
    cfg.bias_max = bias_max;
    cfg.proposals = bg::proposal_mode_from_string(proposals);
    cfg.seed = seed;
    auto records = bg::generate_synthetic_dataset(cfg);
    std::filesystem::create_directories(out_dir);
    for (const auto& b : records)
        bg::save_board(b, std::filesystem::path(out_dir) / (b.board_id + ".json"));
    return int(records.size());
}

int make_splits(const std::string& data_dir, const std::string& out_file, int folds,
                std::uint64_t seed, double test_fraction) {
    auto boards = bg::load_dataset(data_dir);
    bg::Rng rng(seed);
    auto split = bg::make_cv_splits(boards, folds, rng, test_fraction > 0 ? test_fraction : 1.0);
    bg::save_split(split, out_file);
    return int(split.folds.size());
}

py::dict train(const std::string& data_dir, const std::string& split_file,
               const std::string& out_ckpt, int fold, const std::string& block,
               const std::string& loss, const std::string& batching, const std::string& extra,
               int epochs, int n, int k, double margin, double lr, double momentum,
               double weight_decay, int iters, double jitter, int patience, int depth,
               const std::string& similarity, std::uint64_t seed) {
    bg::TrainConfig cfg;
    cfg.block = bg::block_kind_from_string(block);
    cfg.loss = bg::loss_kind_from_string(loss);
    cfg.batching = bg::batch_mode_from_string(batching);
    cfg.extra = bg::extra_mode_from_string(extra);
    cfg.block_depth = depth;
    if (similarity == "cosine") cfg.similarity = bg::SimKind::Cosine;
    else if (similarity != "dot") throw bg::ConfigError("unknown similarity '" + similarity + "'");
    cfg.epochs = epochs;
    cfg.n_way = n;
    cfg.k_shot = k;
    cfg.margin = margin;
    cfg.lr = lr;
    cfg.momentum = momentum;
    cfg.weight_decay = weight_decay;
    cfg.iterations_per_epoch = iters;
    cfg.jitter_scale = jitter;
    cfg.plateau_patience = patience;
    cfg.seed = seed;

    auto boards = bg::load_dataset(data_dir);
    auto split = bg::load_split(split_file);
    auto result = bg::run_training(boards, fold_at(split, fold), cfg);

    bg::save_checkpoint(result.params, result.optim, seed, out_ckpt);
    std::filesystem::path best = out_ckpt;
    best += ".best.json";
    bg::save_checkpoint(result.best_params, result.optim, seed, best);
    std::filesystem::path metrics = out_ckpt;
    metrics += ".metrics.csv";
    bg::write_text_atomic(metrics, bg::metrics_csv(result.log));

    py::dict out;
    out["epochs"] = int(result.log.size());
    out["final_loss"] = result.log.back().loss;
    out["val_top1"] = result.log.back().eval_top1;
    out["checkpoint"] = out_ckpt;
    out["best_checkpoint"] = best.string();
    out["metrics_csv"] = metrics.string();
    return out;
}

py::dict evaluate(const std::string& data_dir, const std::string& split_file,
                  const std::string& ckpt, int fold, const std::string& mode,
                  const std::string& templates, double threshold, std::uint64_t seed) {
    auto boards = bg::load_dataset(data_dir);
    auto split = bg::load_split(split_file);
    const auto& f = fold_at(split, fold);
    auto test_boards = fold_boards(boards, f.test);
    auto train_boards = fold_boards(boards, f.train);
    auto ck = bg::load_checkpoint(ckpt);
    auto strategy = bg::template_strategy_from_string(templates);
    bg::Rng rng(seed);

    py::dict out;
    out["mode"] = mode;
    if (mode == "classification") {
        auto report = bg::evaluate_classification(test_boards, train_boards, ck.params, strategy,
                                                  rng);
        out["top1"] = report.top1;
        out["top5"] = report.top5;
        out["n_queries"] = report.n_queries;
    } else if (mode == "pipeline") {
        auto report =
            bg::run_pipeline_eval(test_boards, train_boards, ck.params, strategy, threshold, rng);
        out["map"] = report.map;
        py::list cats;
        for (const auto& c : report.per_category) {
            py::dict entry;
            entry["category"] = c.category;
            entry["ap"] = c.ap;
            entry["n_gt"] = c.n_gt;
            entry["tp"] = c.tp;
            entry["fp"] = c.fp;
            entry["fn"] = c.fn;
            cats.append(entry);
        }
        out["per_category"] = cats;
        out["warnings"] = report.warnings;
    } else {
        throw bg::ConfigError("unknown eval mode '" + mode + "'");
    }
    return out;
}

double gradcheck(int dim, int nodes, std::uint64_t seed, const std::string& block,
                 const std::string& loss) {
    return bg::model_gradcheck(dim, nodes, seed, bg::block_kind_from_string(block),
                               bg::loss_kind_from_string(loss))
        .max_relative_error;
}

double box_iou_py(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    return bg::box_iou(bg::Bbox{a[0], a[1], a[2], a[3]}, bg::Bbox{b[0], b[1], b[2], b[3]});
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "board-conditioned graph embeddings for low-shot component classification";

    py::register_exception<bg::Error>(m, "BoardgraphError");

    m.def("generate_dataset", &generate_dataset, "generate a synthetic board dataset",
          py::arg("out_dir"), py::arg("boards") = 60, py::arg("classes") = 12, py::arg("dim") = 64,
          py::arg("instances") = 40, py::arg("sigma_board") = 0.4, py::arg("sigma_inst") = 0.1,
          py::arg("power") = 1.0, py::arg("proto_correlation") = 0.6,
          py::arg("family_correlation") = 0.9, py::arg("family_size") = 3,
          py::arg("feature_scale") = 4.0, py::arg("gain_min") = 0.85,
          py::arg("gain_max") = 1.15, py::arg("bias_min") = -0.1, py::arg("bias_max") = 0.1,
          py::arg("proposals") = "none", py::arg("seed") = 0);
    m.def("make_splits", &make_splits, "generate cross-validation splits", py::arg("data_dir"),
          py::arg("out_file"), py::arg("folds") = 3, py::arg("seed") = 0,
          py::arg("test_fraction") = 0.0);
    m.def("train", &train, "train a model on one fold", py::arg("data_dir"),
          py::arg("split_file"), py::arg("out_ckpt"), py::arg("fold") = 0,
          py::arg("block") = "none", py::arg("loss") = "triplet", py::arg("batching") = "within",
          py::arg("extra") = "none", py::arg("epochs") = 500, py::arg("n") = 10, py::arg("k") = 10,
          py::arg("margin") = 1.0, py::arg("lr") = 1e-4, py::arg("momentum") = 0.9,
          py::arg("weight_decay") = 1e-4, py::arg("iters") = 0, py::arg("jitter") = 0.05,
          py::arg("patience") = 50, py::arg("depth") = 1, py::arg("similarity") = "dot",
          py::arg("seed") = 0);
    m.def("evaluate", &evaluate, "evaluate a checkpoint on one fold", py::arg("data_dir"),
          py::arg("split_file"), py::arg("ckpt"), py::arg("fold") = 0,
          py::arg("mode") = "classification", py::arg("templates") = "random",
          py::arg("threshold") = 0.3, py::arg("seed") = 0);
    m.def("gradcheck", &gradcheck, "max relative error of analytic vs numeric gradients",
          py::arg("dim") = 16, py::arg("nodes") = 6, py::arg("seed") = 0, py::arg("block") = "gn",
          py::arg("loss") = "triplet");
    m.def("box_iou", &box_iou_py, "intersection over union of two [x1,y1,x2,y2] boxes",
          py::arg("a"), py::arg("b"));

    m.attr("__version__") = "0.1.0";
}
