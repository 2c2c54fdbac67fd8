#include "boardgraph/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace boardgraph {

double box_iou(const Bbox& a, const Bbox& b) {
    if (!a.well_ordered() || !b.well_ordered()) throw ShapeError("box_iou: degenerate box");
    const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::string> categories_on_board(const BoardRecord& board) {
    std::set<std::string> cats;
    for (const auto& inst : board.instances) cats.insert(inst.category);
    return {cats.begin(), cats.end()};
}

// Assembles the node set for one board evaluation: query features plus
// template nodes. Templates whose source instance sits on the board are
// marked in place; external ones (training instances, cluster centers)
// are appended. Returns refined features split back into queries and a
// per-category template bank.
struct BoardEval {
    std::vector<Vec> query_features;      // refined, parallel to query_cats
    std::vector<std::string> query_cats;  // ground truth (empty for proposals)
    std::vector<std::string> query_ids;
    std::vector<TemplateEntry> bank;  // refined template features
};

int category_index(const ModelParams& model, const std::string& name) {
    auto it = std::find(model.categories.begin(), model.categories.end(), name);
    return it == model.categories.end() ? -1 : int(it - model.categories.begin());
}

BoardEval refine_board(const BoardRecord& board, const std::vector<const ComponentInstance*>& queries,
                       const std::vector<TemplateEntry>& templates, const ModelParams& model) {
    const int C = int(model.categories.size());
    std::set<std::string> on_board_templates;
    for (const auto& t : templates)
        for (const auto* q : queries)
            if (!t.source_id.empty() && t.source_id == q->id) on_board_templates.insert(t.source_id);

    BoardGraph g;
    std::vector<int> query_slots;
    for (const auto* q : queries) {
        const bool is_template = on_board_templates.count(q->id) > 0;
        const int cat_index = is_template ? category_index(model, q->category) : -1;
        g.node_features.push_back(augment_node_features(q->feature, model.extra, &q->bbox,
                                                        board.width, board.height, is_template,
                                                        cat_index, C));
        g.meta.push_back({board.board_id, q->id, is_template, cat_index});
        query_slots.push_back(int(g.node_features.size()) - 1);
    }

    // External templates become extra nodes.
    std::vector<std::pair<int, int>> extern_templates;  // (node slot, template index)
    for (std::size_t t = 0; t < templates.size(); ++t) {
        if (!templates[t].source_id.empty() && on_board_templates.count(templates[t].source_id))
            continue;
        const auto& entry = templates[t];
        Bbox bb;
        const Bbox* bb_ptr = nullptr;
        double tw = board.width, th = board.height;
        if (entry.bbox) {
            bb = {(*entry.bbox)[0], (*entry.bbox)[1], (*entry.bbox)[2], (*entry.bbox)[3]};
            bb_ptr = &bb;
            if (entry.board_w > 0 && entry.board_h > 0) {
                tw = entry.board_w;
                th = entry.board_h;
            }
        }
        g.node_features.push_back(augment_node_features(entry.feature, model.extra, bb_ptr, tw, th,
                                                        true, entry.category, C));
        g.meta.push_back({board.board_id, entry.source_id, true, entry.category});
        extern_templates.emplace_back(int(g.node_features.size()) - 1, int(t));
    }

    BoardGraph refined = block_apply_stack(model.block, g, model.gn, model.block_depth);

    BoardEval ev;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        if (on_board_templates.count(queries[qi]->id)) continue;  // templates are not queries
        ev.query_features.push_back(refined.node_features[query_slots[qi]]);
        ev.query_cats.push_back(queries[qi]->category);
        ev.query_ids.push_back(queries[qi]->id);
    }
    // Bank: on-board template nodes first, then external ones.
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        if (!on_board_templates.count(queries[qi]->id)) continue;
        TemplateEntry t;
        t.category = category_index(model, queries[qi]->category);
        t.feature = refined.node_features[query_slots[qi]];
        t.source_id = queries[qi]->id;
        ev.bank.push_back(std::move(t));
    }
    for (const auto& [slot, t] : extern_templates) {
        TemplateEntry entry = templates[t];
        entry.feature = refined.node_features[slot];
        ev.bank.push_back(std::move(entry));
    }
    return ev;
}

std::vector<TemplateEntry> pick_templates(const BoardRecord& board,
                                          const std::vector<BoardRecord>& train_boards,
                                          const ModelParams& model, TemplateStrategy strategy,
                                          Rng& rng) {
    CategoryIndex cats;
    cats.names = model.categories;
    if (strategy == TemplateStrategy::RandomOnBoard)
        return select_templates_random_on_board(board, categories_on_board(board), cats, rng);
    return select_templates_from_training(train_boards, strategy, categories_on_board(board), cats,
                                          rng);
}

}  // namespace

EvalReport evaluate_classification(const std::vector<BoardRecord>& test_boards,
                                   const std::vector<BoardRecord>& train_boards,
                                   const ModelParams& model, TemplateStrategy strategy, Rng& rng) {
    EvalReport report;
    long hits1 = 0, hits5 = 0;
    for (const auto& board : test_boards) {
        if (board.instances.empty()) continue;
        std::vector<TemplateEntry> templates =
            pick_templates(board, train_boards, model, strategy, rng);
        std::vector<const ComponentInstance*> queries;
        for (const auto& inst : board.instances) queries.push_back(&inst);
        BoardEval ev = refine_board(board, queries, templates, model);
        if (ev.query_features.empty()) continue;

        std::vector<CategoryRanking> rankings =
            classify_by_templates(ev.query_features, ev.bank, model.sim);
        for (std::size_t q = 0; q < rankings.size(); ++q) {
            ++report.n_queries;
            const auto& ranked = rankings[q].ranked;
            const int truth = category_index(model, ev.query_cats[q]);
            if (truth < 0) continue;  // unknown category: counted as a miss

            for (std::size_t k = 0; k < ranked.size() && k < 5; ++k) {
                if (ranked[k].first == truth) {
                    if (k == 0) ++hits1;
                    ++hits5;
                    break;
                }
            }
        }
    }
    if (report.n_queries > 0) {
        report.top1 = double(hits1) / double(report.n_queries);
        report.top5 = double(hits5) / double(report.n_queries);
    }
    return report;
}

EvalReport evaluate_detection_map(const std::vector<DetectionResult>& predictions,
                                  const std::vector<BoardRecord>& gt_boards, double iou_threshold) {
    std::map<std::string, const BoardRecord*> boards;
    for (const auto& b : gt_boards) boards[b.board_id] = &b;
    for (const auto& p : predictions)
        if (!boards.count(p.board_id))
            throw Error("detection eval: prediction references unknown board '" + p.board_id + "'");

    // Ground truth per category.
    std::map<std::string, long> gt_counts;
    for (const auto& b : gt_boards)
        for (const auto& inst : b.instances) ++gt_counts[inst.category];

    EvalReport report;
    double ap_sum = 0.0;
    for (const auto& [category, n_gt] : gt_counts) {
        std::vector<const DetectionResult*> preds;
        for (const auto& p : predictions)
            if (p.category == category) preds.push_back(&p);
        std::sort(preds.begin(), preds.end(), [](const DetectionResult* a, const DetectionResult* b) {
            if (a->confidence != b->confidence) return a->confidence > b->confidence;
            return a->instance_id < b->instance_id;
        });

        // Greedy matching against unmatched ground truth of the category.
        std::map<std::string, std::vector<bool>> used;
        for (const auto& [id, board] : boards) used[id].assign(board->instances.size(), false);

        std::vector<bool> is_tp(preds.size(), false);
        for (std::size_t k = 0; k < preds.size(); ++k) {
            const auto& board = *boards[preds[k]->board_id];
            auto& taken = used[preds[k]->board_id];
            int best = -1;
            double best_iou = iou_threshold;
            for (std::size_t g = 0; g < board.instances.size(); ++g) {
                if (taken[g] || board.instances[g].category != category) continue;
                double iou = box_iou(preds[k]->bbox, board.instances[g].bbox);
                if (iou >= best_iou && (best < 0 || iou > best_iou)) {
                    best_iou = iou;
                    best = int(g);
                }
            }
            if (best >= 0) {
                taken[std::size_t(best)] = true;
                is_tp[k] = true;
            }
        }

        CategoryAP cap;
        cap.category = category;
        cap.n_gt = n_gt;
        long tp = 0, fp = 0;
        std::vector<double> precision, recall;
        for (std::size_t k = 0; k < preds.size(); ++k) {
            if (is_tp[k]) ++tp;
            else ++fp;
            precision.push_back(double(tp) / double(tp + fp));
            recall.push_back(double(tp) / double(n_gt));
        }
        cap.tp = tp;
        cap.fp = fp;
        cap.fn = n_gt - tp;

        // All-point interpolation: integrate the running-max precision
        // envelope over recall.
        double ap = 0.0;
        double max_prec = 0.0;
        for (std::size_t k = preds.size(); k-- > 0;) {
            max_prec = std::max(max_prec, precision[k]);
            double r_lo = k == 0 ? 0.0 : recall[k - 1];
            ap += (recall[k] - r_lo) * max_prec;
        }
        cap.ap = ap;
        ap_sum += ap;
        report.per_category.push_back(std::move(cap));
    }
    if (!report.per_category.empty()) report.map = ap_sum / double(report.per_category.size());
    return report;
}

EvalReport run_pipeline_eval(const std::vector<BoardRecord>& test_boards,
                             const std::vector<BoardRecord>& train_boards,
                             const ModelParams& model, TemplateStrategy strategy,
                             double score_threshold, Rng& rng,
                             std::vector<DetectionResult>* detections_out) {
    std::vector<DetectionResult> detections;
    std::vector<std::string> warnings;
    for (const auto& board : test_boards) {
        if (board.proposals.empty()) {
            warnings.push_back("board '" + board.board_id + "' has no proposals; skipped");
            continue;
        }
        std::vector<const ComponentInstance*> survivors;
        for (const auto& p : board.proposals)
            if (p.score >= score_threshold) survivors.push_back(&p);
        if (survivors.empty()) continue;
        if (board.instances.empty()) {
            warnings.push_back("board '" + board.board_id + "' has no labeled instances; skipped");
            continue;
        }

        std::vector<TemplateEntry> templates =
            pick_templates(board, train_boards, model, strategy, rng);
        BoardEval ev = refine_board(board, survivors, templates, model);
        std::map<std::string, const ComponentInstance*> by_id;
        for (const auto* s : survivors) by_id[s->id] = s;
        std::vector<CategoryRanking> rankings =
            classify_by_templates(ev.query_features, ev.bank, model.sim);
        for (std::size_t q = 0; q < rankings.size(); ++q) {
            if (rankings[q].ranked.empty()) continue;
            DetectionResult det;
            det.board_id = board.board_id;
            det.instance_id = ev.query_ids[q];
            const auto* src = by_id.at(ev.query_ids[q]);
            det.bbox = src->bbox;
            const int cat = rankings[q].ranked.front().first;
            det.category = cat >= 0 && cat < int(model.categories.size())
                               ? model.categories[std::size_t(cat)]
                               : "";
            det.confidence = sigmoid(rankings[q].ranked.front().second);
            detections.push_back(std::move(det));
        }
    }

    EvalReport report = evaluate_detection_map(detections, test_boards);
    report.warnings = std::move(warnings);
    if (detections_out) *detections_out = std::move(detections);
    return report;
}

}  // namespace boardgraph
