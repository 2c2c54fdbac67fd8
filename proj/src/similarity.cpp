#include "boardgraph/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace boardgraph {

namespace {

double sim_from_embeds(const Vec& zi, const Vec& zj, SimKind kind) {
    if (kind == SimKind::Dot) return dot(zi, zj);
    double ni = std::sqrt(dot(zi, zi));
    double nj = std::sqrt(dot(zj, zj));
    double denom = ni * nj;
    if (denom == 0.0) return 0.0;
    return dot(zi, zj) / denom;
}

// d(sim)/d(zi) and d(sim)/d(zj), scaled by coef, accumulated in place.
void sim_backward(const Vec& zi, const Vec& zj, SimKind kind, double coef, Vec& dzi, Vec& dzj) {
    if (kind == SimKind::Dot) {
        for (std::size_t k = 0; k < zi.size(); ++k) {
            dzi[k] += coef * zj[k];
            dzj[k] += coef * zi[k];
        }
        return;
    }
    double ni = std::sqrt(dot(zi, zi));
    double nj = std::sqrt(dot(zj, zj));
    double denom = ni * nj;
    if (denom == 0.0) return;
    double s = dot(zi, zj) / denom;
    for (std::size_t k = 0; k < zi.size(); ++k) {
        dzi[k] += coef * (zj[k] / denom - s * zi[k] / (ni * ni));
        dzj[k] += coef * (zi[k] / denom - s * zj[k] / (nj * nj));
    }
}

void check_batch(const TripletBatch& batch) {
    if (batch.features.empty()) throw DegenerateBatchError("loss: empty batch");
    if (batch.features.size() != batch.categories.size())
        throw ShapeError("loss: feature/category count mismatch");
    std::set<int> cats(batch.categories.begin(), batch.categories.end());
    if (cats.size() < 2)
        throw DegenerateBatchError("loss: batch holds fewer than 2 categories");
}

std::vector<Vec> embed_batch(const TripletBatch& batch, const SimilarityParams& p) {
    std::vector<Vec> z(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) z[i] = linear_apply(batch.features[i], p.phi_d);
    return z;
}

// Pushes accumulated embedding gradients through phi_d into the outputs.
void finish_grads(const TripletBatch& batch, const SimilarityParams& p,
                  const std::vector<Vec>& d_z, LossGrads& grads) {
    if (!grads.d_features && !grads.d_phi) return;
    LinearGrad local(p.phi_d);
    LinearGrad& phi_grad = grads.d_phi ? *grads.d_phi : local;
    if (grads.d_features) grads.d_features->assign(batch.size(), Vec(batch.features[0].size(), 0.0));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Vec df = linear_backward(batch.features[i], p.phi_d, d_z[i], phi_grad);
        if (grads.d_features) (*grads.d_features)[i] = std::move(df);
    }
}

}  // namespace

double similarity_score(const Vec& a, const Vec& b, const SimilarityParams& p) {
    if (a.size() != b.size()) throw ShapeError("similarity_score: dimension mismatch");
    Vec za = linear_apply(a, p.phi_d);
    Vec zb = linear_apply(b, p.phi_d);
    return sim_from_embeds(za, zb, p.kind);
}

LossReport triplet_loss(const TripletBatch& batch, const SimilarityParams& p, LossGrads grads) {
    check_batch(batch);
    if (batch.margin <= 0.0) throw ConfigError("triplet_loss: margin must be positive");
    const int n = int(batch.size());
    std::vector<Vec> z = embed_batch(batch, p);

    Mat sim(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sim(i, j) = sim_from_embeds(z[i], z[j], p.kind);

    // First pass: count the strictly positive hinge terms.
    LossReport report;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < n; ++s) {
            if (s == i || batch.categories[s] != batch.categories[i]) continue;
            for (int d = 0; d < n; ++d) {
                if (batch.categories[d] == batch.categories[i]) continue;
                ++report.total_terms;
                double term = sim(i, d) - sim(i, s) + batch.margin;
                if (term > 0.0) {
                    ++report.active_terms;
                    total += term;
                }
            }
        }
    }
    report.loss = report.active_terms > 0 ? total / double(report.active_terms) : 0.0;

    if (grads.d_features || grads.d_phi) {
        std::vector<Vec> d_z(n, Vec(z[0].size(), 0.0));
        if (report.active_terms > 0) {
            // dL/dsim coefficients; only active terms contribute.
            const double coef = 1.0 / double(report.active_terms);
            Mat c(n, n);
            for (int i = 0; i < n; ++i) {
                for (int s = 0; s < n; ++s) {
                    if (s == i || batch.categories[s] != batch.categories[i]) continue;
                    for (int d = 0; d < n; ++d) {
                        if (batch.categories[d] == batch.categories[i]) continue;
                        if (sim(i, d) - sim(i, s) + batch.margin > 0.0) {
                            c(i, d) += coef;
                            c(i, s) -= coef;
                        }
                    }
                }
            }
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (c(i, j) != 0.0) sim_backward(z[i], z[j], p.kind, c(i, j), d_z[i], d_z[j]);
        }
        finish_grads(batch, p, d_z, grads);
    }
    return report;
}

LossReport bce_pair_loss(const TripletBatch& batch, const SimilarityParams& p, LossGrads grads) {
    check_batch(batch);
    const int n = int(batch.size());
    std::vector<Vec> z = embed_batch(batch, p);

    LossReport report;
    std::vector<Vec> d_z;
    if (grads.d_features || grads.d_phi) d_z.assign(n, Vec(z[0].size(), 0.0));

    const long n_pairs = long(n) * (n - 1) / 2;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double s = sim_from_embeds(z[i], z[j], p.kind);
            double y = batch.categories[i] == batch.categories[j] ? 1.0 : 0.0;
            // Stable BCE-with-logits: max(s,0) - s*y + log(1 + exp(-|s|)).
            double l = std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::fabs(s)));
            total += l;
            ++report.total_terms;
            if (l > 0.0) ++report.active_terms;
            if (!d_z.empty()) {
                double sigma = 1.0 / (1.0 + std::exp(-s));
                sim_backward(z[i], z[j], p.kind, (sigma - y) / double(n_pairs), d_z[i], d_z[j]);
            }
        }
    }
    report.loss = total / double(n_pairs);
    if (!d_z.empty()) finish_grads(batch, p, d_z, grads);
    return report;
}

LossReport classifier_head_loss(const TripletBatch& batch, const LinearParams& head,
                                LossGrads grads) {
    if (batch.features.empty()) throw DegenerateBatchError("loss: empty batch");
    if (batch.features.size() != batch.categories.size())
        throw ShapeError("loss: feature/category count mismatch");
    const int n = int(batch.size());
    const int n_classes = head.out_dim();
    for (int c : batch.categories)
        if (c < 0 || c >= n_classes)
            throw LabelError("classifier_head_loss: category id " + std::to_string(c) +
                             " out of range [0, " + std::to_string(n_classes) + ")");

    LossReport report;
    if (grads.d_features)
        grads.d_features->assign(n, Vec(batch.features[0].size(), 0.0));

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec logits = linear_apply(batch.features[i], head);
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double l : logits) z += std::exp(l - mx);
        double logz = std::log(z) + mx;
        double li = logz - logits[batch.categories[i]];
        total += li;
        ++report.total_terms;
        if (li > 0.0) ++report.active_terms;
        if (grads.d_features || grads.d_head) {
            Vec d_logits(n_classes);
            for (int c = 0; c < n_classes; ++c) {
                double pc = std::exp(logits[c] - logz);
                d_logits[c] = (pc - (c == batch.categories[i] ? 1.0 : 0.0)) / double(n);
            }
            LinearGrad local(head);
            LinearGrad& hg = grads.d_head ? *grads.d_head : local;
            Vec df = linear_backward(batch.features[i], head, d_logits, hg);
            if (grads.d_features) (*grads.d_features)[i] = std::move(df);
        }
    }
    report.loss = total / double(n);
    return report;
}

CategoryRanking rank_categories(const std::vector<std::pair<int, double>>& template_scores) {
    std::map<int, double> best;
    for (const auto& [cat, score] : template_scores) {
        auto it = best.find(cat);
        if (it == best.end() || score > it->second) best[cat] = score;
    }
    CategoryRanking r;
    r.ranked.assign(best.begin(), best.end());
    std::stable_sort(r.ranked.begin(), r.ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return r;
}

std::vector<CategoryRanking> classify_by_templates(const std::vector<Vec>& queries,
                                                   const std::vector<TemplateEntry>& templates,
                                                   const SimilarityParams& p) {
    if (templates.empty()) throw ConfigError("classify_by_templates: empty template set");
    std::vector<Vec> zt(templates.size());
    for (std::size_t t = 0; t < templates.size(); ++t)
        zt[t] = linear_apply(templates[t].feature, p.phi_d);

    std::vector<CategoryRanking> out;
    out.reserve(queries.size());
    std::vector<std::pair<int, double>> scores;
    for (const auto& q : queries) {
        Vec zq = linear_apply(q, p.phi_d);
        scores.clear();
        for (std::size_t t = 0; t < templates.size(); ++t)
            scores.emplace_back(templates[t].category, sim_from_embeds(zq, zt[t], p.kind));
        out.push_back(rank_categories(scores));
    }
    return out;
}

}  // namespace boardgraph
