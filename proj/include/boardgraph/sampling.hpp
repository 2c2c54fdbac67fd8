#pragma once

// Episodic N-way K-shot batching (within one board or across boards),
// cross-validation splits with category coverage, template selection
// strategies and extra-feature concatenation.

#include "boardgraph/data.hpp"
#include "boardgraph/model.hpp"
#include "boardgraph/similarity.hpp"

namespace boardgraph {

enum class BatchMode { Within, Across };

BatchMode batch_mode_from_string(const std::string& s);
const char* to_string(BatchMode m);

// One sampled instance: indices into the dataset passed to the sampler.
struct SampledItem {
    int board = 0;
    int instance = 0;
};

// An N-way K-shot training sample before feature augmentation. `features`
// are the jittered visual features (dimension d); `items` point back at
// the source instances so geometry/label extras can be attached.
struct Episode {
    std::vector<SampledItem> items;
    std::vector<Vec> features;
    std::vector<int> categories;  // indices into the CategoryIndex
    std::vector<std::string> board_ids;
};

// Draws N categories and K instances per category; within-mode draws all
// of them from one uniformly chosen board, sampling with replacement when
// a board is short on types or instances. `jitter_sigma` is a per-dim
// Gaussian scale (empty for none).
Episode sample_training_batch(const std::vector<BoardRecord>& boards, BatchMode mode, int n_way,
                              int k_shot, const Vec& jitter_sigma, const CategoryIndex& cats,
                              Rng& rng);

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> test;
};

struct SplitConfig {
    std::vector<Fold> folds;
};

// Disjoint test folds; boards greedily covering all categories are forced
// into every training set first, the rest are shuffled and partitioned.
// test_fraction caps each fold's test share of the dataset (default: the
// whole partition chunk, i.e. ~1/folds).
SplitConfig make_cv_splits(const std::vector<BoardRecord>& boards, int folds, Rng& rng,
                           double test_fraction = 1.0);

void save_split(const SplitConfig& split, const std::filesystem::path& path);
SplitConfig load_split(const std::filesystem::path& path);

// Checks the coverage invariant: every category on a fold's test boards
// appears on at least one of its training boards. Throws on violation.
void validate_split(const SplitConfig& split, const std::vector<BoardRecord>& boards);

enum class TemplateStrategy { RandomOnBoard, CentroidNN, SilhouetteKMeans };

TemplateStrategy template_strategy_from_string(const std::string& s);
const char* to_string(TemplateStrategy s);

// Semi-supervised strategy: one uniformly chosen labeled instance per
// required category from the board itself.
std::vector<TemplateEntry> select_templates_random_on_board(
    const BoardRecord& board, const std::vector<std::string>& required_categories,
    const CategoryIndex& cats, Rng& rng);

// Training-set strategies: the instance nearest its category centroid, or
// silhouette-selected k-means cluster centers (k in 2..min(8, n-1), mean
// silhouette maximized; categories with fewer than 4 instances fall back
// to centroid-nn).
std::vector<TemplateEntry> select_templates_from_training(
    const std::vector<BoardRecord>& train_boards, TemplateStrategy strategy,
    const std::vector<std::string>& required_categories, const CategoryIndex& cats, Rng& rng);

// k-means with silhouette model selection, exposed for tests.
struct KMeansResult {
    std::vector<Vec> centers;
    std::vector<int> assignment;
};
KMeansResult kmeans_cluster(const std::vector<Vec>& points, int k, Rng& rng, int max_iters = 50);
double mean_silhouette(const std::vector<Vec>& points, const std::vector<int>& assignment, int k);

// Appends geometry or label extras to a visual feature. Geometry needs a
// bbox and the board dimensions (templates without a bbox get zeros);
// label mode appends one-hot(C) for labeled template nodes, zeros for
// queries, plus an is-labeled indicator.
Vec augment_node_features(const Vec& visual, ExtraMode mode, const Bbox* bbox, double board_w,
                          double board_h, bool is_labeled_template, int category_index,
                          int n_categories);

}  // namespace boardgraph
