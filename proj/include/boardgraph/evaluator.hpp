#pragma once

// Classification metrics, box IoU, greedy detection matching with
// all-point interpolated AP, and the end-to-end pipeline evaluation over
// ingested proposals.

#include "boardgraph/model.hpp"
#include "boardgraph/sampling.hpp"

namespace boardgraph {

double box_iou(const Bbox& a, const Bbox& b);

struct DetectionResult {
    std::string board_id;
    std::string instance_id;  // proposal id, used as the deterministic tie-break
    Bbox bbox;
    std::string category;
    double confidence = 0.0;  // winning similarity mapped through a sigmoid
};

struct CategoryAP {
    std::string category;
    double ap = 0.0;
    long n_gt = 0;
    long tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
    // Classification section.
    double top1 = 0.0, top5 = 0.0;
    long n_queries = 0;
    // Detection section.
    double map = 0.0;
    std::vector<CategoryAP> per_category;
    std::vector<std::string> warnings;
};

// Per board: nodes are the ground-truth instances plus the selected
// templates; features get the checkpoint's extra mode, the block refines
// them, and every non-template instance is classified by ranked template
// similarity. Accuracy is micro-averaged over queries.
EvalReport evaluate_classification(const std::vector<BoardRecord>& test_boards,
                                   const std::vector<BoardRecord>& train_boards,
                                   const ModelParams& model, TemplateStrategy strategy, Rng& rng);

// Greedy confidence-descending matching at the IoU threshold, then
// all-point interpolated AP per category; mAP averages categories with at
// least one ground-truth instance.
EvalReport evaluate_detection_map(const std::vector<DetectionResult>& predictions,
                                  const std::vector<BoardRecord>& gt_boards,
                                  double iou_threshold = 0.5);

// Thresholds proposals, classifies the survivors through the board graph
// and scores the result as a detector. Boards without proposals are
// skipped with a warning (their ground truth still counts).
EvalReport run_pipeline_eval(const std::vector<BoardRecord>& test_boards,
                             const std::vector<BoardRecord>& train_boards,
                             const ModelParams& model, TemplateStrategy strategy,
                             double score_threshold, Rng& rng,
                             std::vector<DetectionResult>* detections_out = nullptr);

}  // namespace boardgraph
