// Command-line front end: dataset generation, split generation, training,
// evaluation, prediction and gradient checking, each as one subcommand
// with a run manifest written next to every output artifact.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "boardgraph/evaluator.hpp"
#include "boardgraph/io.hpp"
#include "boardgraph/trainer.hpp"
#include "json.hpp"

namespace bg = boardgraph;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// One manifest per command run, written atomically alongside the outputs.
struct ManifestWriter {
    std::string command;
    json config = json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> artifacts;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::filesystem::path& path) const {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["seed"] = seed;
        j["artifacts"] = artifacts;
        j["wall_clock_sec"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        j["version"] = kVersion;
        j["created_utc"] = utc_now();
        bg::write_text_atomic(path, j.dump(1));
    }
};

std::string join_argv(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

std::filesystem::path sibling(const std::filesystem::path& artifact, const std::string& suffix) {
    std::filesystem::path p = artifact;
    p += suffix;
    return p;
}

// Fold membership -> board records.
std::vector<bg::BoardRecord> boards_by_ids(const std::vector<bg::BoardRecord>& all,
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
        throw bg::ConfigError("fold index " + std::to_string(fold) + " out of range (file has " +
                              std::to_string(split.folds.size()) + ")");
    return split.folds[std::size_t(fold)];
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"board-conditioned graph embeddings for low-shot component classification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // ---- gen ----------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a synthetic board dataset");
    bg::SyntheticConfig gcfg;
    std::string gen_out, gen_proposals = "none";
    gen->add_option("--boards", gcfg.n_boards, "number of boards")->default_val(60);
    gen->add_option("--classes", gcfg.n_categories, "number of component types")->default_val(12);
    gen->add_option("--dim", gcfg.feature_dim, "feature dimension")->default_val(64);
    gen->add_option("--seed", gcfg.seed, "rng seed")->default_val(0);
    gen->add_option("--sigma-board", gcfg.sigma_board, "cross-board prototype shift")
        ->default_val(0.4);
    gen->add_option("--sigma-inst", gcfg.sigma_inst, "within-board spread")->default_val(0.1);
    gen->add_option("--instances", gcfg.instances_per_board, "instances per board")
        ->default_val(40);
    gen->add_option("--power", gcfg.power_exponent, "category imbalance exponent")
        ->default_val(1.0);
    gen->add_option("--proto-correlation", gcfg.proto_correlation,
                    "cross-family prototype correlation")
        ->default_val(0.6);
    gen->add_option("--family-correlation", gcfg.family_correlation,
                    "within-family prototype correlation")
        ->default_val(0.9);
    gen->add_option("--family-size", gcfg.family_size, "categories per look-alike family")
        ->default_val(3);
    gen->add_option("--feature-scale", gcfg.feature_scale, "prototype norm")->default_val(4.0);
    gen->add_option("--gain-min", gcfg.gain_min, "per-board gain lower bound")->default_val(0.85);
    gen->add_option("--gain-max", gcfg.gain_max, "per-board gain upper bound")->default_val(1.15);
    gen->add_option("--bias-min", gcfg.bias_min, "per-board bias lower bound")->default_val(-0.1);
    gen->add_option("--bias-max", gcfg.bias_max, "per-board bias upper bound")->default_val(0.1);
    gen->add_option("--proposals", gen_proposals, "emit proposals: none|perfect|noisy")
        ->default_val("none");
    gen->add_option("--out", gen_out, "output directory")->required();

    // ---- split --------------------------------------------------------
    auto* split_cmd = app.add_subcommand("split", "generate cross-validation splits");
    std::string split_data, split_out;
    int split_folds = 3;
    std::uint64_t split_seed = 0;
    double split_fraction = 0.0;
    split_cmd->add_option("--data", split_data, "dataset directory")->required();
    split_cmd->add_option("--folds", split_folds, "number of folds")->default_val(3);
    split_cmd->add_option("--seed", split_seed, "rng seed")->default_val(0);
    split_cmd->add_option("--test-fraction", split_fraction,
                          "cap on each fold's test share (default 1/folds)");
    split_cmd->add_option("--out", split_out, "output split file")->required();

    // ---- train --------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train a model on one fold");
    std::string tr_data, tr_split, tr_out;
    std::string tr_block = "none", tr_loss = "triplet", tr_batching = "within", tr_extra = "none";
    std::string tr_similarity = "dot";
    int tr_fold = 0;
    bg::TrainConfig tcfg;
    train_cmd->add_option("--data", tr_data, "dataset directory")->required();
    train_cmd->add_option("--split", tr_split, "split file")->required();
    train_cmd->add_option("--fold", tr_fold, "fold index")->default_val(0);
    train_cmd->add_option("--block", tr_block, "graph block: none|nlnn|gn")->default_val("none");
    train_cmd->add_option("--depth", tcfg.block_depth, "stacked block applications")
        ->default_val(1);
    train_cmd->add_option("--loss", tr_loss, "loss: triplet|bce|ce")->default_val("triplet");
    train_cmd->add_option("--batching", tr_batching, "batching: within|across")
        ->default_val("within");
    train_cmd->add_option("--extra", tr_extra, "extra features: none|geometry|label")
        ->default_val("none");
    train_cmd->add_option("--epochs", tcfg.epochs, "training epochs")->default_val(500);
    train_cmd->add_option("--seed", tcfg.seed, "rng seed")->default_val(0);
    train_cmd->add_option("--n", tcfg.n_way, "N categories per batch")->default_val(10);
    train_cmd->add_option("--k", tcfg.k_shot, "K instances per category")->default_val(10);
    train_cmd->add_option("--margin", tcfg.margin, "triplet margin")->default_val(1.0);
    train_cmd->add_option("--similarity", tr_similarity, "similarity function: dot|cosine")
        ->default_val("dot");
    train_cmd->add_option("--lr", tcfg.lr, "learning rate")->default_val(1e-4);
    train_cmd->add_option("--momentum", tcfg.momentum, "sgd momentum")->default_val(0.9);
    train_cmd->add_option("--weight-decay", tcfg.weight_decay, "weight decay")->default_val(1e-4);
    train_cmd->add_option("--iters", tcfg.iterations_per_epoch,
                          "iterations per epoch (0 = one per training board)");
    train_cmd->add_option("--jitter", tcfg.jitter_scale, "feature jitter scale")->default_val(0.05);
    train_cmd->add_option("--patience", tcfg.plateau_patience, "plateau patience in epochs")
        ->default_val(50);
    train_cmd->add_option("--out", tr_out, "output checkpoint path")->required();

    // ---- eval ---------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on one fold");
    std::string ev_data, ev_split, ev_model, ev_out, ev_csv;
    std::string ev_mode = "classification", ev_templates = "random";
    int ev_fold = 0;
    double ev_threshold = 0.3;
    std::uint64_t ev_seed = 0;
    eval_cmd->add_option("--data", ev_data, "dataset directory")->required();
    eval_cmd->add_option("--split", ev_split, "split file")->required();
    eval_cmd->add_option("--fold", ev_fold, "fold index")->default_val(0);
    eval_cmd->add_option("--model", ev_model, "checkpoint path")->required();
    eval_cmd->add_option("--mode", ev_mode, "classification|pipeline")
        ->default_val("classification");
    eval_cmd->add_option("--templates", ev_templates, "random|centroid|kmeans")
        ->default_val("random");
    eval_cmd->add_option("--threshold", ev_threshold, "proposal score threshold")
        ->default_val(0.3);
    eval_cmd->add_option("--seed", ev_seed, "rng seed for template selection")->default_val(0);
    eval_cmd->add_option("--csv", ev_csv, "optional per-category AP csv");
    eval_cmd->add_option("--out", ev_out, "output report path")->required();

    // ---- predict ------------------------------------------------------
    auto* pred_cmd = app.add_subcommand("predict", "classify one board's proposals");
    std::string pr_board, pr_model, pr_out, pr_templates = "random";
    double pr_threshold = 0.3;
    std::uint64_t pr_seed = 0;
    pred_cmd->add_option("--board", pr_board, "board file")->required();
    pred_cmd->add_option("--model", pr_model, "checkpoint path")->required();
    pred_cmd->add_option("--templates", pr_templates, "template strategy (random)")
        ->default_val("random");
    pred_cmd->add_option("--threshold", pr_threshold, "proposal score threshold")
        ->default_val(0.3);
    pred_cmd->add_option("--seed", pr_seed, "rng seed")->default_val(0);
    pred_cmd->add_option("--out", pr_out, "output detections path")->required();

    // ---- gradcheck ----------------------------------------------------
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of the backward pass");
    int gc_dim = 16, gc_nodes = 6;
    std::uint64_t gc_seed = 0;
    std::string gc_block = "gn", gc_loss = "triplet";
    gc_cmd->add_option("--dim", gc_dim, "node feature dimension")->default_val(16);
    gc_cmd->add_option("--nodes", gc_nodes, "graph size")->default_val(6);
    gc_cmd->add_option("--seed", gc_seed, "rng seed")->default_val(0);
    gc_cmd->add_option("--block", gc_block, "gn|nlnn|none")->default_val("gn");
    gc_cmd->add_option("--loss", gc_loss, "triplet|bce|ce")->default_val("triplet");
    int gc_depth = 1;
    gc_cmd->add_option("--depth", gc_depth, "stacked block applications")->default_val(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    ManifestWriter manifest;
    manifest.command = join_argv(argc, argv);

    try {
        if (*gen) {
            gcfg.proposals = bg::proposal_mode_from_string(gen_proposals);
            manifest.seed = gcfg.seed;
            manifest.config = {{"boards", gcfg.n_boards},       {"classes", gcfg.n_categories},
                               {"dim", gcfg.feature_dim},       {"instances", gcfg.instances_per_board},
                               {"power", gcfg.power_exponent},  {"sigma_board", gcfg.sigma_board},
                               {"sigma_inst", gcfg.sigma_inst},
                               {"proto_correlation", gcfg.proto_correlation},
                               {"family_correlation", gcfg.family_correlation},
                               {"family_size", gcfg.family_size},
                               {"feature_scale", gcfg.feature_scale},
                               {"gain_min", gcfg.gain_min},     {"gain_max", gcfg.gain_max},
                               {"bias_min", gcfg.bias_min},     {"bias_max", gcfg.bias_max},
                               {"proposals", gen_proposals}};
            auto boards = bg::generate_synthetic_dataset(gcfg);
            std::filesystem::create_directories(gen_out);
            for (const auto& b : boards) {
                auto path = std::filesystem::path(gen_out) / (b.board_id + ".json");
                bg::save_board(b, path);
                manifest.artifacts.push_back(path.string());
            }
            manifest.write(std::filesystem::path(gen_out) / "manifest.json");
            std::cout << "wrote " << boards.size() << " boards to " << gen_out << "\n";
        } else if (*split_cmd) {
            manifest.seed = split_seed;
            manifest.config = {{"data", split_data},
                               {"folds", split_folds},
                               {"test_fraction", split_fraction}};
            auto boards = bg::load_dataset(split_data);
            bg::Rng rng(split_seed);
            double fraction = split_fraction > 0.0 ? split_fraction : 1.0;
            auto split = bg::make_cv_splits(boards, split_folds, rng, fraction);
            bg::save_split(split, split_out);
            manifest.artifacts.push_back(split_out);
            manifest.write(sibling(split_out, ".manifest.json"));
            std::cout << "wrote " << split.folds.size() << " folds to " << split_out << "\n";
        } else if (*train_cmd) {
            tcfg.block = bg::block_kind_from_string(tr_block);
            tcfg.loss = bg::loss_kind_from_string(tr_loss);
            tcfg.batching = bg::batch_mode_from_string(tr_batching);
            tcfg.extra = bg::extra_mode_from_string(tr_extra);
            if (tr_similarity == "cosine") tcfg.similarity = bg::SimKind::Cosine;
            else if (tr_similarity != "dot")
                throw bg::ConfigError("unknown similarity '" + tr_similarity + "'");
            manifest.seed = tcfg.seed;
            manifest.config = {{"data", tr_data},       {"split", tr_split},
                               {"fold", tr_fold},       {"block", tr_block},
                               {"loss", tr_loss},       {"batching", tr_batching},
                               {"extra", tr_extra},     {"epochs", tcfg.epochs},
                               {"depth", tcfg.block_depth},
                               {"similarity", tr_similarity},
                               {"n", tcfg.n_way},       {"k", tcfg.k_shot},
                               {"margin", tcfg.margin}, {"lr", tcfg.lr},
                               {"momentum", tcfg.momentum},
                               {"weight_decay", tcfg.weight_decay},
                               {"iters", tcfg.iterations_per_epoch},
                               {"jitter", tcfg.jitter_scale},
                               {"patience", tcfg.plateau_patience}};
            auto boards = bg::load_dataset(tr_data);
            auto split = bg::load_split(tr_split);
            auto result = bg::run_training(boards, fold_at(split, tr_fold), tcfg);

            bg::save_checkpoint(result.params, result.optim, tcfg.seed, tr_out);
            auto best_path = sibling(tr_out, ".best.json");
            bg::save_checkpoint(result.best_params, result.optim, tcfg.seed, best_path);
            auto metrics_path = sibling(tr_out, ".metrics.csv");
            bg::write_text_atomic(metrics_path, bg::metrics_csv(result.log));
            manifest.artifacts = {tr_out, best_path.string(), metrics_path.string()};
            manifest.write(sibling(tr_out, ".manifest.json"));
            const auto& last = result.log.back();
            std::printf("trained %d epochs: loss %.4f, val top1 %.4f\n", last.epoch, last.loss,
                        last.eval_top1);
        } else if (*eval_cmd) {
            manifest.seed = ev_seed;
            manifest.config = {{"data", ev_data},           {"split", ev_split},
                               {"fold", ev_fold},           {"model", ev_model},
                               {"mode", ev_mode},           {"templates", ev_templates},
                               {"threshold", ev_threshold}};
            auto boards = bg::load_dataset(ev_data);
            auto split = bg::load_split(ev_split);
            const auto& fold = fold_at(split, ev_fold);
            auto test_boards = boards_by_ids(boards, fold.test);
            auto train_boards = boards_by_ids(boards, fold.train);
            auto ck = bg::load_checkpoint(ev_model);
            auto strategy = bg::template_strategy_from_string(ev_templates);
            bg::Rng rng(ev_seed);

            json out;
            out["mode"] = ev_mode;
            if (ev_mode == "classification") {
                auto report = bg::evaluate_classification(test_boards, train_boards, ck.params,
                                                          strategy, rng);
                out["top1"] = report.top1;
                out["top5"] = report.top5;
                out["n_queries"] = report.n_queries;
                std::printf("top1 %.4f top5 %.4f over %ld queries\n", report.top1, report.top5,
                            report.n_queries);
            } else if (ev_mode == "pipeline") {
                auto report = bg::run_pipeline_eval(test_boards, train_boards, ck.params, strategy,
                                                    ev_threshold, rng);
                out["map"] = report.map;
                out["per_category"] = json::array();
                std::string csv = "category,ap,n_gt,tp,fp,fn\n";
                for (const auto& c : report.per_category) {
                    out["per_category"].push_back({{"category", c.category},
                                                   {"ap", c.ap},
                                                   {"n_gt", c.n_gt},
                                                   {"tp", c.tp},
                                                   {"fp", c.fp},
                                                   {"fn", c.fn}});
                    char line[160];
                    std::snprintf(line, sizeof(line), "%s,%.17g,%ld,%ld,%ld,%ld\n",
                                  c.category.c_str(), c.ap, c.n_gt, c.tp, c.fp, c.fn);
                    csv += line;
                }
                out["warnings"] = report.warnings;
                for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
                if (!ev_csv.empty()) {
                    bg::write_text_atomic(ev_csv, csv);
                    manifest.artifacts.push_back(ev_csv);
                }
                std::printf("mAP %.4f over %zu categories\n", report.map,
                            report.per_category.size());
            } else {
                throw bg::ConfigError("unknown eval mode '" + ev_mode + "'");
            }
            bg::write_text_atomic(ev_out, out.dump(1));
            manifest.artifacts.push_back(ev_out);
            manifest.write(sibling(ev_out, ".manifest.json"));
        } else if (*pred_cmd) {
            manifest.seed = pr_seed;
            manifest.config = {{"board", pr_board},
                               {"model", pr_model},
                               {"templates", pr_templates},
                               {"threshold", pr_threshold}};
            auto board = bg::load_board(pr_board);
            if (board.proposals.empty())
                throw bg::ConfigError("board '" + board.board_id + "' carries no proposals");
            auto ck = bg::load_checkpoint(pr_model);
            auto strategy = bg::template_strategy_from_string(pr_templates);
            bg::Rng rng(pr_seed);
            std::vector<bg::DetectionResult> detections;
            bg::run_pipeline_eval({board}, {}, ck.params, strategy, pr_threshold, rng, &detections);
            json out = json::array();
            for (const auto& det : detections)
                out.push_back({{"id", det.instance_id},
                               {"board_id", det.board_id},
                               {"bbox", {det.bbox.x1, det.bbox.y1, det.bbox.x2, det.bbox.y2}},
                               {"category", det.category},
                               {"confidence", det.confidence}});
            bg::write_text_atomic(pr_out, out.dump(1));
            manifest.artifacts.push_back(pr_out);
            manifest.write(sibling(pr_out, ".manifest.json"));
            std::cout << "wrote " << detections.size() << " detections to " << pr_out << "\n";
        } else if (*gc_cmd) {
            manifest.seed = gc_seed;
            auto report = bg::model_gradcheck(gc_dim, gc_nodes, gc_seed,
                                              bg::block_kind_from_string(gc_block),
                                              bg::loss_kind_from_string(gc_loss), 1e-4, gc_depth);
            std::printf("max relative error %.3e (worst: %s[%zu])\n", report.max_relative_error,
                        report.worst_param.c_str(), report.worst_index);
            return report.max_relative_error < 1e-3 ? 0 : 1;
        }
    } catch (const bg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
