#pragma once

// Similarity embedding and the losses trained on top of it: the triplet
// loss with non-zero-term normalization, the pairwise BCE ablation and the
// plain cross-entropy classifier head, plus template-based classification.

#include <array>
#include <optional>
#include <vector>

#include "boardgraph/linalg.hpp"

namespace boardgraph {

enum class SimKind { Dot, Cosine };

struct SimilarityParams {
    LinearParams phi_d;  // d' -> d'/2
    SimKind kind = SimKind::Dot;
};

double similarity_score(const Vec& a, const Vec& b, const SimilarityParams& p);

// An N-way K-shot sample after feature refinement.
struct TripletBatch {
    std::vector<Vec> features;
    std::vector<int> categories;
    std::vector<std::string> board_ids;
    double margin = 1.0;

    std::size_t size() const { return features.size(); }
};

struct LossReport {
    double loss = 0.0;
    long active_terms = 0;  // M: strictly positive hinge terms
    long total_terms = 0;
};

// Optional gradient outputs shared by the loss functions. `d_features`
// receives dL/d(batch feature i); `d_phi` the embedding gradients and
// `d_head` the classifier head gradients where applicable.
struct LossGrads {
    std::vector<Vec>* d_features = nullptr;
    LinearGrad* d_phi = nullptr;
    LinearGrad* d_head = nullptr;
};

// Hinge over every (anchor, similar, dissimilar) triple in the batch,
// normalized by the number of strictly positive terms.
LossReport triplet_loss(const TripletBatch& batch, const SimilarityParams& p,
                        LossGrads grads = {});

// Binary cross-entropy of sigmoid(score) against the same-category
// indicator, mean over all unordered pairs.
LossReport bce_pair_loss(const TripletBatch& batch, const SimilarityParams& p,
                         LossGrads grads = {});

// Softmax cross-entropy of a linear head, mean over the batch.
LossReport classifier_head_loss(const TripletBatch& batch, const LinearParams& head,
                                LossGrads grads = {});

struct TemplateEntry {
    int category = -1;
    Vec feature;
    std::string source_id;                      // instance the template came from, if any
    std::optional<std::array<double, 4>> bbox;  // absent for synthetic cluster centers
    double board_w = 0, board_h = 0;            // source board dims, for geometry extras
};

// Per-query ranking of distinct categories by best template score,
// descending; ties broken by lowest category index.
struct CategoryRanking {
    std::vector<std::pair<int, double>> ranked;  // (category, score)

    int top() const { return ranked.empty() ? -1 : ranked.front().first; }
};

std::vector<CategoryRanking> classify_by_templates(const std::vector<Vec>& queries,
                                                   const std::vector<TemplateEntry>& templates,
                                                   const SimilarityParams& p);

// Ranking step alone, for callers that already computed per-template
// scores. Category score is the max over that category's templates.
CategoryRanking rank_categories(const std::vector<std::pair<int, double>>& template_scores);

}  // namespace boardgraph
