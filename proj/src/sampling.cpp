#include "boardgraph/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "boardgraph/io.hpp"
#include "json.hpp"

namespace boardgraph {

using nlohmann::json;

BatchMode batch_mode_from_string(const std::string& s) {
    if (s == "within") return BatchMode::Within;
    if (s == "across") return BatchMode::Across;
    throw ConfigError("unknown batching mode '" + s + "'");
}

const char* to_string(BatchMode m) {
    return m == BatchMode::Within ? "within" : "across";
}

TemplateStrategy template_strategy_from_string(const std::string& s) {
    if (s == "random") return TemplateStrategy::RandomOnBoard;
    if (s == "centroid") return TemplateStrategy::CentroidNN;
    if (s == "kmeans") return TemplateStrategy::SilhouetteKMeans;
    throw ConfigError("unknown template strategy '" + s + "'");
}

const char* to_string(TemplateStrategy s) {
    switch (s) {
        case TemplateStrategy::RandomOnBoard: return "random";
        case TemplateStrategy::CentroidNN: return "centroid";
        case TemplateStrategy::SilhouetteKMeans: return "kmeans";
    }
    return "?";
}

namespace {

// Sample `want` entries from [0, pool); without replacement while the pool
// lasts, with replacement once it is short.
std::vector<std::size_t> sample_indices(std::size_t pool, std::size_t want, Rng& rng) {
    std::vector<std::size_t> out;
    out.reserve(want);
    if (want <= pool) {
        std::vector<std::size_t> all(pool);
        for (std::size_t i = 0; i < pool; ++i) all[i] = i;
        for (std::size_t i = 0; i < want; ++i) {
            std::size_t j = i + rng.uniform_index(pool - i);
            std::swap(all[i], all[j]);
            out.push_back(all[i]);
        }
    } else {
        for (std::size_t i = 0; i < want; ++i) out.push_back(rng.uniform_index(pool));
    }
    return out;
}

void apply_jitter(Vec& feature, const Vec& sigma, Rng& rng) {
    if (sigma.empty()) return;
    if (sigma.size() != feature.size())
        throw ShapeError("jitter: sigma dimension does not match feature dimension");
    for (std::size_t k = 0; k < feature.size(); ++k)
        if (sigma[k] > 0) feature[k] += sigma[k] * rng.normal();
}

}  // namespace

Episode sample_training_batch(const std::vector<BoardRecord>& boards, BatchMode mode, int n_way,
                              int k_shot, const Vec& jitter_sigma, const CategoryIndex& cats,
                              Rng& rng) {
    if (boards.empty()) throw ConfigError("sampler: empty dataset");
    if (n_way < 1 || k_shot < 1) throw ConfigError("sampler: N and K must be positive");

    // Category -> list of (board, instance), restricted to one board in
    // within mode.
    std::map<int, std::vector<SampledItem>> by_category;
    if (mode == BatchMode::Within) {
        int b = int(rng.uniform_index(boards.size()));
        for (std::size_t i = 0; i < boards[b].instances.size(); ++i) {
            int c = cats.index_of(boards[b].instances[i].category);
            if (c >= 0) by_category[c].push_back({b, int(i)});
        }
    } else {
        for (std::size_t b = 0; b < boards.size(); ++b)
            for (std::size_t i = 0; i < boards[b].instances.size(); ++i) {
                int c = cats.index_of(boards[b].instances[i].category);
                if (c >= 0) by_category[c].push_back({int(b), int(i)});
            }
    }
    if (by_category.empty()) throw ConfigError("sampler: no labeled instances to sample");

    std::vector<int> present;
    present.reserve(by_category.size());
    for (const auto& [c, _] : by_category) present.push_back(c);

    Episode ep;
    for (std::size_t w : sample_indices(present.size(), std::size_t(n_way), rng)) {
        int c = present[w];
        const auto& pool = by_category[c];
        for (std::size_t pick : sample_indices(pool.size(), std::size_t(k_shot), rng)) {
            const SampledItem item = pool[pick];
            const ComponentInstance& inst = boards[item.board].instances[item.instance];
            Vec f = inst.feature;
            apply_jitter(f, jitter_sigma, rng);
            ep.items.push_back(item);
            ep.features.push_back(std::move(f));
            ep.categories.push_back(c);
            ep.board_ids.push_back(boards[item.board].board_id);
        }
    }
    return ep;
}

SplitConfig make_cv_splits(const std::vector<BoardRecord>& boards, int folds, Rng& rng,
                           double test_fraction) {
    if (folds < 1) throw ConfigError("splits: folds must be positive");
    if (int(boards.size()) < folds + 1)
        throw InfeasibleSplitError("splits: need more boards than folds");
    if (test_fraction <= 0.0 || test_fraction > 1.0)
        throw ConfigError("splits: test_fraction must be in (0,1]");

    // Greedy cover: force boards into training until every category is
    // covered. The cover is shared by all folds, which keeps fold test
    // sets disjoint.
    std::set<std::string> uncovered;
    for (const auto& b : boards)
        for (const auto& inst : b.instances) uncovered.insert(inst.category);

    std::vector<bool> forced(boards.size(), false);
    while (!uncovered.empty()) {
        int best = -1;
        std::size_t best_gain = 0;
        for (std::size_t i = 0; i < boards.size(); ++i) {
            if (forced[i]) continue;
            std::set<std::string> cats;
            for (const auto& inst : boards[i].instances)
                if (uncovered.count(inst.category)) cats.insert(inst.category);
            if (cats.size() > best_gain) {
                best_gain = cats.size();
                best = int(i);
            }
        }
        if (best < 0) break;  // no board adds coverage; cannot happen for categories from boards
        forced[best] = true;
        for (const auto& inst : boards[best].instances) uncovered.erase(inst.category);
    }

    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < boards.size(); ++i)
        if (!forced[i]) pool.push_back(i);
    if (pool.size() < std::size_t(folds))
        throw InfeasibleSplitError("splits: category coverage leaves fewer free boards than folds");

    for (std::size_t i = pool.size(); i > 1; --i)
        std::swap(pool[i - 1], pool[rng.uniform_index(i)]);

    const std::size_t cap =
        std::max<std::size_t>(1, std::size_t(std::llround(test_fraction * double(boards.size()))));

    SplitConfig split;
    split.folds.resize(folds);
    for (int f = 0; f < folds; ++f) {
        // Contiguous chunk of the shuffled pool forms this fold's test set.
        std::size_t lo = pool.size() * f / folds;
        std::size_t hi = pool.size() * (f + 1) / folds;
        std::set<std::size_t> test_set;
        for (std::size_t i = lo; i < hi && test_set.size() < cap; ++i) test_set.insert(pool[i]);
        if (test_set.empty())
            throw InfeasibleSplitError("splits: empty test fold " + std::to_string(f));
        Fold& fold = split.folds[f];
        for (std::size_t i = 0; i < boards.size(); ++i) {
            if (test_set.count(i)) fold.test.push_back(boards[i].board_id);
            else fold.train.push_back(boards[i].board_id);
        }
    }
    validate_split(split, boards);
    return split;
}

void validate_split(const SplitConfig& split, const std::vector<BoardRecord>& boards) {
    std::map<std::string, const BoardRecord*> by_id;
    for (const auto& b : boards) by_id[b.board_id] = &b;
    for (std::size_t f = 0; f < split.folds.size(); ++f) {
        const Fold& fold = split.folds[f];
        std::set<std::string> train_cats;
        for (const auto& id : fold.train) {
            auto it = by_id.find(id);
            if (it == by_id.end())
                throw InfeasibleSplitError("splits: unknown board '" + id + "' in fold " +
                                           std::to_string(f));
            for (const auto& inst : it->second->instances) train_cats.insert(inst.category);
        }
        for (const auto& id : fold.test) {
            auto it = by_id.find(id);
            if (it == by_id.end())
                throw InfeasibleSplitError("splits: unknown board '" + id + "' in fold " +
                                           std::to_string(f));
            for (const auto& inst : it->second->instances)
                if (!train_cats.count(inst.category))
                    throw InfeasibleSplitError("splits: category '" + inst.category +
                                               "' on test board '" + id +
                                               "' is missing from training in fold " +
                                               std::to_string(f));
        }
    }
}

void save_split(const SplitConfig& split, const std::filesystem::path& path) {
    json j;
    j["folds"] = json::array();
    for (const auto& f : split.folds) j["folds"].push_back({{"train", f.train}, {"test", f.test}});
    write_text_atomic(path, j.dump(1));
}

SplitConfig load_split(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw ParseError("split file " + path.string() + ": " + e.what());
    }
    SplitConfig split;
    if (!j.contains("folds") || !j["folds"].is_array())
        throw ParseError("split file " + path.string() + ": missing folds array");
    for (const auto& f : j["folds"]) {
        Fold fold;
        fold.train = f.value("train", std::vector<std::string>{});
        fold.test = f.value("test", std::vector<std::string>{});
        split.folds.push_back(std::move(fold));
    }
    return split;
}

namespace {

double euclidean(const Vec& a, const Vec& b) { return std::sqrt(squared_distance(a, b)); }

TemplateEntry entry_from_instance(const ComponentInstance& inst, const BoardRecord& board,
                                  int category) {
    TemplateEntry t;
    t.category = category;
    t.feature = inst.feature;
    t.source_id = inst.id;
    t.bbox = std::array<double, 4>{inst.bbox.x1, inst.bbox.y1, inst.bbox.x2, inst.bbox.y2};
    t.board_w = board.width;
    t.board_h = board.height;
    return t;
}

}  // namespace

std::vector<TemplateEntry> select_templates_random_on_board(
    const BoardRecord& board, const std::vector<std::string>& required_categories,
    const CategoryIndex& cats, Rng& rng) {
    std::map<std::string, std::vector<const ComponentInstance*>> pools;
    for (const auto& inst : board.instances) pools[inst.category].push_back(&inst);

    std::vector<std::string> missing;
    std::vector<TemplateEntry> out;
    for (const auto& cat : required_categories) {
        auto it = pools.find(cat);
        if (it == pools.end() || it->second.empty()) {
            missing.push_back(cat);
            continue;
        }
        const auto* chosen = it->second[rng.uniform_index(it->second.size())];
        out.push_back(entry_from_instance(*chosen, board, cats.index_of(cat)));
    }
    if (!missing.empty()) {
        std::string msg = "no template instance on board '" + board.board_id + "' for:";
        for (const auto& m : missing) msg += " " + m;
        throw MissingTemplateError(msg);
    }
    return out;
}

KMeansResult kmeans_cluster(const std::vector<Vec>& points, int k, Rng& rng, int max_iters) {
    if (points.empty() || k < 1 || k > int(points.size()))
        throw ConfigError("kmeans: need 1 <= k <= point count");
    const int n = int(points.size());

    // k-means++ seeding.
    KMeansResult res;
    res.centers.push_back(points[rng.uniform_index(points.size())]);
    std::vector<double> d2(n);
    while (int(res.centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = squared_distance(points[i], res.centers[0]);
            for (std::size_t c = 1; c < res.centers.size(); ++c)
                best = std::min(best, squared_distance(points[i], res.centers[c]));
            d2[i] = best;
            total += best;
        }
        int chosen;
        if (total <= 0.0) {
            chosen = int(rng.uniform_index(points.size()));
        } else {
            double u = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2[i];
                if (u < acc) {
                    chosen = i;
                    break;
                }
            }
        }
        res.centers.push_back(points[chosen]);
    }

    res.assignment.assign(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bestd = squared_distance(points[i], res.centers[0]);
            for (int c = 1; c < k; ++c) {
                double d = squared_distance(points[i], res.centers[c]);
                if (d < bestd) {
                    bestd = d;
                    best = c;
                }
            }
            if (res.assignment[i] != best) {
                res.assignment[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        std::vector<Vec> sums(k, Vec(points[0].size(), 0.0));
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            ++counts[res.assignment[i]];
            for (std::size_t f = 0; f < points[i].size(); ++f)
                sums[res.assignment[i]][f] += points[i][f];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Reseed an empty cluster at the point farthest from its center.
                int far = 0;
                double fard = -1.0;
                for (int i = 0; i < n; ++i) {
                    double d = squared_distance(points[i], res.centers[res.assignment[i]]);
                    if (d > fard) {
                        fard = d;
                        far = i;
                    }
                }
                res.centers[c] = points[far];
                continue;
            }
            for (std::size_t f = 0; f < sums[c].size(); ++f)
                res.centers[c][f] = sums[c][f] / double(counts[c]);
        }
    }
    return res;
}

double mean_silhouette(const std::vector<Vec>& points, const std::vector<int>& assignment,
                       int k) {
    const int n = int(points.size());
    if (n == 0 || int(assignment.size()) != n) throw ShapeError("silhouette: bad inputs");
    std::vector<int> counts(k, 0);
    for (int a : assignment) {
        if (a < 0 || a >= k) throw ShapeError("silhouette: assignment out of range");
        ++counts[a];
    }

    double total = 0.0;
    std::vector<double> dist_sum(k);
    for (int i = 0; i < n; ++i) {
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[assignment[j]] += euclidean(points[i], points[j]);
        }
        const int own = assignment[i];
        if (counts[own] <= 1) continue;  // singleton clusters score 0
        double a = dist_sum[own] / double(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, dist_sum[c] / double(counts[c]));
        }
        if (!std::isfinite(b)) continue;  // only one nonempty cluster
        double denom = std::max(a, b);
        if (denom > 0) total += (b - a) / denom;
    }
    return total / double(n);
}

std::vector<TemplateEntry> select_templates_from_training(
    const std::vector<BoardRecord>& train_boards, TemplateStrategy strategy,
    const std::vector<std::string>& required_categories, const CategoryIndex& cats, Rng& rng) {
    if (strategy == TemplateStrategy::RandomOnBoard)
        throw ConfigError("random-on-board templates come from the test board, not training");

    using Source = std::pair<const ComponentInstance*, const BoardRecord*>;
    std::map<std::string, std::vector<Source>> pools;
    for (const auto& b : train_boards)
        for (const auto& inst : b.instances) pools[inst.category].emplace_back(&inst, &b);

    std::vector<std::string> missing;
    for (const auto& cat : required_categories)
        if (!pools.count(cat)) missing.push_back(cat);
    if (!missing.empty()) {
        std::string msg = "no training instances for:";
        for (const auto& m : missing) msg += " " + m;
        throw MissingTemplateError(msg);
    }

    std::vector<TemplateEntry> out;
    for (const auto& cat : required_categories) {
        const auto& pool = pools[cat];
        const int c = cats.index_of(cat);

        auto centroid_nn = [&]() {
            Vec centroid(pool[0].first->feature.size(), 0.0);
            for (const auto& [inst, _] : pool)
                for (std::size_t f = 0; f < centroid.size(); ++f) centroid[f] += inst->feature[f];
            for (auto& v : centroid) v /= double(pool.size());
            Source best = pool[0];
            double bestd = squared_distance(pool[0].first->feature, centroid);
            for (const auto& src : pool) {
                double d = squared_distance(src.first->feature, centroid);
                if (d < bestd) {
                    bestd = d;
                    best = src;
                }
            }
            out.push_back(entry_from_instance(*best.first, *best.second, c));
        };

        if (strategy == TemplateStrategy::CentroidNN || int(pool.size()) < 4) {
            centroid_nn();
            continue;
        }

        // Silhouette-selected k over the category's training features.
        std::vector<Vec> points;
        points.reserve(pool.size());
        for (const auto& [inst, _] : pool) points.push_back(inst->feature);
        const int k_max = std::min(8, int(points.size()) - 1);
        int best_k = -1;
        double best_score = -2.0;
        KMeansResult best_res;
        for (int k = 2; k <= k_max; ++k) {
            KMeansResult res = kmeans_cluster(points, k, rng);
            double s = mean_silhouette(points, res.assignment, k);
            if (s > best_score) {
                best_score = s;
                best_k = k;
                best_res = std::move(res);
            }
        }
        if (best_k < 0) {
            centroid_nn();
            continue;
        }
        for (const auto& center : best_res.centers) {
            TemplateEntry t;
            t.category = c;
            t.feature = center;
            out.push_back(std::move(t));
        }
    }
    return out;
}

Vec augment_node_features(const Vec& visual, ExtraMode mode, const Bbox* bbox, double board_w,
                          double board_h, bool is_labeled_template, int category_index,
                          int n_categories) {
    if (mode == ExtraMode::None) return visual;
    Vec out = visual;
    if (mode == ExtraMode::Geometry) {
        if (bbox) {
            const double w = bbox->width(), h = bbox->height();
            out.push_back((bbox->x1 + bbox->x2) * 0.5 / board_w);
            out.push_back((bbox->y1 + bbox->y2) * 0.5 / board_h);
            out.push_back(w / board_w);
            out.push_back(h / board_h);
            out.push_back(std::log(w / h));
            out.push_back(std::sqrt(bbox->area()) / std::sqrt(board_w * board_h));
        } else {
            // Synthetic templates (cluster centers) have no box.
            out.insert(out.end(), 6, 0.0);
        }
        return out;
    }
    // Label mode: one-hot for labeled templates, zeros for queries, plus an
    // is-labeled indicator.
    Vec onehot(std::size_t(n_categories) + 1, 0.0);
    if (is_labeled_template) {
        if (category_index < 0 || category_index >= n_categories)
            throw LabelError("augment: labeled template has unknown category index " +
                             std::to_string(category_index));
        onehot[std::size_t(category_index)] = 1.0;
        onehot.back() = 1.0;
    }
    out.insert(out.end(), onehot.begin(), onehot.end());
    return out;
}

}  // namespace boardgraph
