#pragma once

// SGD with momentum and weight decay, reduce-on-plateau scheduling, the
// epoch loop tying sampler -> extra features -> block -> loss together,
// and checkpoint persistence.

#include <map>

#include "boardgraph/evaluator.hpp"
#include "boardgraph/model.hpp"
#include "boardgraph/sampling.hpp"

namespace boardgraph {

struct OptimState {
    double lr = 1e-4;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double max_grad_norm = 5.0;  // global-norm gradient clip; 0 disables
    int plateau_patience = 50;
    double plateau_factor = 0.5;
    int epochs_since_improvement = 0;
    double best_accuracy = 0.0;
    std::map<std::string, Vec> velocity;  // keyed by tensor name
};

// v <- momentum*v + (grad + weight_decay*param); param <- param - lr*v.
// Aborts without touching parameters if any gradient is non-finite.
void sgd_update(ModelParams& params, GradStore& grads, OptimState& state);

// Strict improvement resets the plateau counter; `patience` consecutive
// non-improving epochs halve the learning rate (factor) and reset it.
void plateau_lr_schedule(OptimState& state, double epoch_eval_accuracy);

struct TrainConfig {
    int epochs = 500;
    int iterations_per_epoch = 0;  // 0 -> one per training board
    int n_way = 10;
    int k_shot = 10;
    double margin = 1.0;
    BatchMode batching = BatchMode::Within;
    BlockKind block = BlockKind::None;
    int block_depth = 1;
    LossKind loss = LossKind::Triplet;
    ExtraMode extra = ExtraMode::None;
    SimKind similarity = SimKind::Dot;
    double lr = 1e-4;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int plateau_patience = 50;
    double plateau_factor = 0.5;
    double max_grad_norm = 5.0;
    double jitter_scale = 0.05;  // x per-dim feature std
    double val_fraction = 0.2;   // training boards held out for the scheduler
    std::uint64_t seed = 0;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double loss = 0.0;
    double eval_top1 = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    ModelParams params;       // final epoch
    ModelParams best_params;  // highest validation accuracy
    OptimState optim;
    std::vector<EpochStats> log;
};

// Trains on the fold's training boards (minus a validation holdout that
// feeds the scheduler) and returns final/best parameters plus the metrics
// log. Deterministic given (dataset, fold, cfg).
TrainResult run_training(const std::vector<BoardRecord>& dataset, const Fold& fold,
                         const TrainConfig& cfg);

std::string metrics_csv(const std::vector<EpochStats>& log);

struct Checkpoint {
    ModelParams params;
    OptimState optim;
    std::uint64_t seed = 0;
};

void save_checkpoint(const ModelParams& params, const OptimState& optim, std::uint64_t seed,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace boardgraph
