#include "doctest.h"

#include <algorithm>
#include <filesystem>

#include "boardgraph/io.hpp"
#include "boardgraph/trainer.hpp"

using namespace boardgraph;
namespace fs = std::filesystem;

namespace {

ModelParams tiny_model(std::uint64_t seed = 0) {
    Rng rng(seed);
    return make_model(BlockKind::None, LossKind::Triplet, ExtraMode::None, 2, {"a", "b"}, rng);
}

std::vector<BoardRecord> degenerate_dataset(int boards, int cats, int dim, std::uint64_t seed,
                                            ProposalMode proposals = ProposalMode::None) {
    SyntheticConfig cfg;
    cfg.n_boards = boards;
    cfg.n_categories = cats;
    cfg.feature_dim = dim;
    cfg.instances_per_board = 8;
    cfg.sigma_board = 0.0;
    cfg.family_correlation = 0.0;
    cfg.sigma_inst = 0.0;
    cfg.gain_min = cfg.gain_max = 1.0;
    cfg.bias_min = cfg.bias_max = 0.0;
    cfg.proposals = proposals;
    cfg.seed = seed;
    return generate_synthetic_dataset(cfg);
}

Fold whole_as_fold(const std::vector<BoardRecord>& boards, std::size_t n_test) {
    Fold fold;
    for (std::size_t i = 0; i < boards.size(); ++i) {
        if (i + n_test < boards.size()) fold.train.push_back(boards[i].board_id);
        else fold.test.push_back(boards[i].board_id);
    }
    return fold;
}

}  // namespace

TEST_CASE("sgd leaves parameters alone when gradients vanish") {
    ModelParams m = tiny_model();
    GradStore g(m);
    g.zero();
    OptimState state;
    state.weight_decay = 0.0;
    Vec before;
    for (const auto& view : m.tensors())
        before.insert(before.end(), view.values.begin(), view.values.end());
    sgd_update(m, g, state);
    sgd_update(m, g, state);
    Vec after;
    for (const auto& view : m.tensors())
        after.insert(after.end(), view.values.begin(), view.values.end());
    CHECK(before == after);
}

TEST_CASE("sgd without momentum is a plain gradient step") {
    ModelParams m = tiny_model();
    GradStore g(m);
    g.zero();
    OptimState state;
    state.lr = 0.5;
    state.momentum = 0.0;
    state.weight_decay = 0.0;
    double w0 = m.sim.phi_d.weight(0, 0);
    g.phi_d.weight(0, 0) = 2.0;
    sgd_update(m, g, state);
    CHECK(m.sim.phi_d.weight(0, 0) == doctest::Approx(w0 - 1.0));
}

TEST_CASE("sgd momentum recurrence matches a hand-computed trajectory") {
    // f(w) = 0.5 w^2, grad = w, from w = 1 with lr 0.1, momentum 0.9:
    // v1 = 1, w1 = 0.9; v2 = 0.9 + 0.9 = 1.8, w2 = 0.9 - 0.18 = 0.72.
    ModelParams m = tiny_model();
    GradStore g(m);
    OptimState state;
    state.lr = 0.1;
    state.momentum = 0.9;
    state.weight_decay = 0.0;
    m.sim.phi_d.weight(0, 0) = 1.0;

    g.zero();
    g.phi_d.weight(0, 0) = m.sim.phi_d.weight(0, 0);
    sgd_update(m, g, state);
    CHECK(m.sim.phi_d.weight(0, 0) == doctest::Approx(0.9));

    g.zero();
    g.phi_d.weight(0, 0) = m.sim.phi_d.weight(0, 0);
    sgd_update(m, g, state);
    CHECK(m.sim.phi_d.weight(0, 0) == doctest::Approx(0.72));
}

TEST_CASE("sgd aborts on non-finite gradients without touching parameters") {
    ModelParams m = tiny_model();
    GradStore g(m);
    g.zero();
    OptimState state;
    double w0 = m.sim.phi_d.weight(0, 0);
    g.phi_d.weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sgd_update(m, g, state), NumericError);
    CHECK(m.sim.phi_d.weight(0, 0) == w0);
}

TEST_CASE("plateau schedule follows the 50-epoch rule") {
    OptimState s;
    s.lr = 1.0;
    s.plateau_patience = 50;

    SUBCASE("monotone improvement never reduces the rate") {
        for (int e = 1; e <= 200; ++e) plateau_lr_schedule(s, std::min(1.0, e * 0.004));
        CHECK(s.lr == 1.0);
    }
    SUBCASE("an established plateau halves once at epoch 50") {
        plateau_lr_schedule(s, 0.5);  // improvement establishes the best
        for (int e = 1; e <= 49; ++e) plateau_lr_schedule(s, 0.5);
        CHECK(s.lr == 1.0);
        plateau_lr_schedule(s, 0.5);  // 50th non-improving epoch
        CHECK(s.lr == 0.5);
    }
    SUBCASE("150 plateau epochs give three halvings") {
        plateau_lr_schedule(s, 0.5);
        for (int e = 1; e <= 150; ++e) plateau_lr_schedule(s, 0.5);
        CHECK(s.lr == doctest::Approx(1.0 / 8.0));
    }
    SUBCASE("ties count as non-improvement, strict increase resets") {
        plateau_lr_schedule(s, 0.5);
        for (int e = 1; e <= 49; ++e) plateau_lr_schedule(s, 0.5);
        plateau_lr_schedule(s, 0.6);  // strict improvement resets the counter
        for (int e = 1; e <= 49; ++e) plateau_lr_schedule(s, 0.6);
        CHECK(s.lr == 1.0);
        plateau_lr_schedule(s, 0.6);
        CHECK(s.lr == 0.5);
    }
    SUBCASE("accuracy outside [0,1] is rejected") {
        CHECK_THROWS_AS(plateau_lr_schedule(s, 1.5), ConfigError);
    }
}

TEST_CASE("scheduler state is a pure function of the accuracy sequence") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> seq(120);
        for (auto& a : seq) a = rng.uniform();
        OptimState s1, s2;
        s1.lr = s2.lr = 0.8;
        for (double a : seq) plateau_lr_schedule(s1, a);
        for (double a : seq) plateau_lr_schedule(s2, a);
        CHECK(s1.lr == s2.lr);
        CHECK(s1.best_accuracy == s2.best_accuracy);
        CHECK(s1.epochs_since_improvement == s2.epochs_since_improvement);
    }
}

TEST_CASE("training separates the degenerate dataset within five epochs") {
    auto boards = degenerate_dataset(8, 3, 8, 1);
    Fold fold = whole_as_fold(boards, 2);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.n_way = 3;
    cfg.k_shot = 3;
    cfg.block = BlockKind::None;
    cfg.loss = LossKind::Triplet;
    cfg.lr = 0.05;
    cfg.seed = 1;
    TrainResult result = run_training(boards, fold, cfg);
    bool reached = false;
    for (const auto& stats : result.log) reached |= stats.eval_top1 == 1.0;
    CHECK(reached);
}

TEST_CASE("training is deterministic given the seed") {
    auto boards = degenerate_dataset(6, 3, 6, 2);
    Fold fold = whole_as_fold(boards, 1);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.n_way = 2;
    cfg.k_shot = 2;
    cfg.seed = 9;
    TrainResult a = run_training(boards, fold, cfg);
    TrainResult b = run_training(boards, fold, cfg);
    CHECK(metrics_csv(a.log) == metrics_csv(b.log));

    auto dir = fs::temp_directory_path() / "boardgraph_determinism";
    fs::create_directories(dir);
    save_checkpoint(a.params, a.optim, cfg.seed, dir / "a.json");
    save_checkpoint(b.params, b.optim, cfg.seed, dir / "b.json");
    CHECK(read_text(dir / "a.json") == read_text(dir / "b.json"));
    fs::remove_all(dir);
}

TEST_CASE("triplet training loss trends downward at desk scale") {
    SyntheticConfig scfg;
    scfg.n_boards = 10;
    scfg.n_categories = 4;
    scfg.feature_dim = 8;
    scfg.instances_per_board = 12;
    scfg.sigma_board = 0.3;
    scfg.sigma_inst = 0.05;
    scfg.seed = 5;
    auto boards = generate_synthetic_dataset(scfg);
    Fold fold = whole_as_fold(boards, 2);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.n_way = 4;
    cfg.k_shot = 4;
    cfg.lr = 5e-3;  // desk-scale rate so the trend shows quickly
    cfg.seed = 3;
    TrainResult result = run_training(boards, fold, cfg);
    std::vector<double> losses;
    for (const auto& s : result.log) losses.push_back(s.loss);
    std::vector<double> sorted = losses;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    CHECK(median < losses.front());
}

TEST_CASE("checkpoints round-trip bit-exactly and preserve behavior") {
    auto boards = degenerate_dataset(6, 3, 6, 4);
    Fold fold = whole_as_fold(boards, 2);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.n_way = 3;
    cfg.k_shot = 2;
    cfg.block = BlockKind::Gn;
    cfg.seed = 11;
    TrainResult result = run_training(boards, fold, cfg);

    auto dir = fs::temp_directory_path() / "boardgraph_ckpt";
    fs::create_directories(dir);
    save_checkpoint(result.params, result.optim, cfg.seed, dir / "model.json");
    Checkpoint ck = load_checkpoint(dir / "model.json");

    // Bit-exact parameters.
    CHECK(ck.params.sim.phi_d.weight.a == result.params.sim.phi_d.weight.a);
    CHECK(ck.params.gn.phi_g.weight.a == result.params.gn.phi_g.weight.a);
    CHECK(ck.params.gn.phi_n.bias == result.params.gn.phi_n.bias);
    CHECK(ck.params.categories == result.params.categories);
    CHECK(ck.optim.lr == result.optim.lr);
    CHECK(ck.seed == cfg.seed);

    // Save-of-load is byte-identical.
    save_checkpoint(ck.params, ck.optim, ck.seed, dir / "again.json");
    CHECK(read_text(dir / "model.json") == read_text(dir / "again.json"));

    // Identical evaluation behavior.
    std::vector<BoardRecord> test_boards;
    for (const auto& id : fold.test)
        for (const auto& b : boards)
            if (b.board_id == id) test_boards.push_back(b);
    Rng r1(0), r2(0);
    auto e1 = evaluate_classification(test_boards, {}, result.params,
                                      TemplateStrategy::RandomOnBoard, r1);
    auto e2 = evaluate_classification(test_boards, {}, ck.params,
                                      TemplateStrategy::RandomOnBoard, r2);
    CHECK(e1.top1 == e2.top1);
    CHECK(e1.top5 == e2.top5);
    fs::remove_all(dir);
}

TEST_CASE("training rejects single-category datasets for triplet loss") {
    auto boards = degenerate_dataset(4, 1, 4, 6);
    Fold fold = whole_as_fold(boards, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(run_training(boards, fold, cfg), DegenerateBatchError);
}

TEST_CASE("metrics csv has the documented header") {
    std::vector<EpochStats> log{{1, 0.5, 0.25, 1e-4}};
    std::string csv = metrics_csv(log);
    CHECK(csv.substr(0, 24) == "epoch,loss,eval_top1,lr\n");
    CHECK(csv.find("1,0.5,0.25,") != std::string::npos);
}
