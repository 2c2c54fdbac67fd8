#include "boardgraph/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "boardgraph/io.hpp"
#include "json.hpp"

namespace boardgraph {

using nlohmann::json;

CategoryIndex CategoryIndex::from_boards(const std::vector<BoardRecord>& boards) {
    std::set<std::string> names;
    for (const auto& b : boards)
        for (const auto& inst : b.instances)
            if (!inst.category.empty()) names.insert(inst.category);
    CategoryIndex idx;
    idx.names.assign(names.begin(), names.end());
    return idx;
}

int CategoryIndex::index_of(const std::string& name) const {
    auto it = std::lower_bound(names.begin(), names.end(), name);
    if (it == names.end() || *it != name) return -1;
    return int(it - names.begin());
}

namespace {

Bbox parse_bbox(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4)
        throw ParseError(where + ": bbox must be [x1,y1,x2,y2]");
    Bbox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!b.well_ordered())
        throw ParseError(where + ": bbox is not well-ordered (x2>x1, y2>y1 required)");
    return b;
}

ComponentInstance parse_instance(const json& j, int feature_dim, const BoardRecord& board,
                                 bool is_proposal, std::size_t ordinal) {
    ComponentInstance inst;
    inst.id = j.value("id", (is_proposal ? "proposal#" : "component#") + std::to_string(ordinal));
    const std::string where = "board '" + board.board_id + "', instance '" + inst.id + "'";

    if (is_proposal) {
        inst.category = j.value("category", "");
        if (!j.contains("score")) throw ParseError(where + ": proposal missing score");
        inst.score = j["score"].get<double>();
    } else {
        if (!j.contains("category") || !j["category"].is_string() ||
            j["category"].get<std::string>().empty())
            throw ParseError(where + ": ground-truth component needs a nonempty category");
        inst.category = j["category"].get<std::string>();
        inst.score = 1.0;
    }
    if (!std::isfinite(inst.score) || inst.score < 0.0 || inst.score > 1.0)
        throw ParseError(where + ": score must be in [0,1]");

    if (!j.contains("bbox")) throw ParseError(where + ": missing bbox");
    inst.bbox = parse_bbox(j["bbox"], where);
    if (inst.bbox.x1 < 0 || inst.bbox.y1 < 0 || inst.bbox.x2 > board.width ||
        inst.bbox.y2 > board.height)
        throw ParseError(where + ": bbox exceeds board bounds");

    if (!j.contains("feature") || !j["feature"].is_array())
        throw ParseError(where + ": missing feature vector");
    inst.feature = j["feature"].get<Vec>();
    if (int(inst.feature.size()) != feature_dim)
        throw ParseError(where + ": feature has length " + std::to_string(inst.feature.size()) +
                         ", board declares feature_dim " + std::to_string(feature_dim));
    for (double v : inst.feature)
        if (!std::isfinite(v)) throw ParseError(where + ": non-finite feature entry");
    return inst;
}

}  // namespace

BoardRecord load_board(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open board file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("board file " + path.string() + ": " + e.what());
    }

    BoardRecord board;
    try {
        board.board_id = j.at("board_id").get<std::string>();
        board.width = j.at("width").get<double>();
        board.height = j.at("height").get<double>();
    } catch (const json::exception& e) {
        throw ParseError("board file " + path.string() + ": " + e.what());
    }
    if (board.width <= 0 || board.height <= 0)
        throw ParseError("board '" + board.board_id + "': non-positive dimensions");

    if (!j.contains("feature_dim"))
        throw ParseError("board '" + board.board_id + "': missing feature_dim");
    const int feature_dim = j["feature_dim"].get<int>();

    const json comps = j.value("components", json::array());
    for (std::size_t i = 0; i < comps.size(); ++i)
        board.instances.push_back(parse_instance(comps[i], feature_dim, board, false, i));
    const json props = j.value("proposals", json::array());
    for (std::size_t i = 0; i < props.size(); ++i)
        board.proposals.push_back(parse_instance(props[i], feature_dim, board, true, i));
    return board;
}

namespace {

json instance_to_json(const ComponentInstance& inst, bool is_proposal) {
    json j;
    j["id"] = inst.id;
    if (!is_proposal) j["category"] = inst.category;
    j["bbox"] = {inst.bbox.x1, inst.bbox.y1, inst.bbox.x2, inst.bbox.y2};
    if (is_proposal) j["score"] = inst.score;
    j["feature"] = inst.feature;
    return j;
}

}  // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        if (!text.empty() && text.back() != '\n') out << '\n';
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_board(const BoardRecord& board, const std::filesystem::path& path) {
    json j;
    j["board_id"] = board.board_id;
    j["width"] = board.width;
    j["height"] = board.height;
    j["feature_dim"] = board.feature_dim();
    j["components"] = json::array();
    for (const auto& inst : board.instances) j["components"].push_back(instance_to_json(inst, false));
    if (!board.proposals.empty()) {
        j["proposals"] = json::array();
        for (const auto& p : board.proposals) j["proposals"].push_back(instance_to_json(p, true));
    }
    write_text_atomic(path, j.dump(1));
}

std::vector<BoardRecord> load_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ParseError("dataset directory does not exist: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<BoardRecord> boards;
    std::set<std::string> seen_ids;
    int feature_dim = -1;
    for (const auto& f : files) {
        {
            // Quick probe: directories may also hold manifests or splits.
            std::ifstream in(f);
            json j;
            try {
                in >> j;
            } catch (const json::exception&) {
                continue;
            }
            if (!j.contains("board_id")) continue;
        }
        BoardRecord b = load_board(f);
        if (!seen_ids.insert(b.board_id).second)
            throw ParseError("duplicate board_id '" + b.board_id + "' in " + dir.string());
        int d = b.feature_dim();
        if (d > 0) {
            if (feature_dim < 0) feature_dim = d;
            else if (d != feature_dim)
                throw ParseError("board '" + b.board_id + "' has feature_dim " + std::to_string(d) +
                                 ", dataset uses " + std::to_string(feature_dim));
        }
        boards.push_back(std::move(b));
    }
    if (boards.empty()) throw ParseError("no board files found in " + dir.string());
    return boards;
}

ProposalMode proposal_mode_from_string(const std::string& s) {
    if (s == "none") return ProposalMode::None;
    if (s == "perfect") return ProposalMode::Perfect;
    if (s == "noisy") return ProposalMode::Noisy;
    throw ConfigError("unknown proposal mode '" + s + "'");
}

const char* to_string(ProposalMode m) {
    switch (m) {
        case ProposalMode::None: return "none";
        case ProposalMode::Perfect: return "perfect";
        case ProposalMode::Noisy: return "noisy";
    }
    return "?";
}

std::string synthetic_category_name(int index) {
    static const char* kNames[] = {"capacitor", "connector", "crystal",  "diode",
                                   "ic",        "inductor",  "led",      "relay",
                                   "resistor",  "switch",    "test_point", "transistor"};
    if (index < 12) return kNames[index];
    return "part" + std::to_string(index);
}

namespace {

// Nonnegative unit vectors, like pooled post-ReLU CNN features.
Vec random_unit_vector(int dim, Rng& rng) {
    Vec v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& x : v) {
            x = std::fabs(rng.normal());
            norm2 += x * x;
        }
    } while (norm2 == 0.0);
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

}  // namespace

std::vector<BoardRecord> generate_synthetic_dataset(const SyntheticConfig& cfg) {
    if (cfg.n_boards < 1 || cfg.n_categories < 1 || cfg.feature_dim < 1 ||
        cfg.instances_per_board < 1)
        throw ConfigError("synthetic: counts must be positive");
    if (cfg.n_categories > 100000) throw ConfigError("synthetic: too many categories");
    if (cfg.sigma_board < 0 || cfg.sigma_inst < 0)
        throw ConfigError("synthetic: sigmas must be nonnegative");
    if (cfg.sigma_inst >= cfg.sigma_board && cfg.sigma_board > 0)
        throw ConfigError("synthetic: sigma_inst must be smaller than sigma_board");
    if (cfg.sigma_inst > 0 && cfg.sigma_board == 0)
        throw ConfigError("synthetic: sigma_inst must be smaller than sigma_board");
    if (cfg.gain_min > cfg.gain_max || cfg.bias_min > cfg.bias_max)
        throw ConfigError("synthetic: invalid gain/bias range");
    if (cfg.proto_correlation < 0.0 || cfg.proto_correlation >= 1.0 ||
        cfg.family_correlation < 0.0 || cfg.family_correlation >= 1.0)
        throw ConfigError("synthetic: correlations must be in [0,1)");
    if (cfg.family_size < 1) throw ConfigError("synthetic: family_size must be positive");

    Rng rng(cfg.seed);
    const int C = cfg.n_categories;
    const int d = cfg.feature_dim;

    auto mix = [&](const Vec& base, double rho) {
        Vec own = random_unit_vector(d, rng);
        Vec p(d);
        double n2 = 0.0;
        for (int k = 0; k < d; ++k) {
            p[k] = std::sqrt(rho) * base[k] + std::sqrt(1.0 - rho) * own[k];
            n2 += p[k] * p[k];
        }
        double inv = 1.0 / std::sqrt(n2);
        for (auto& v : p) v *= inv;
        return p;
    };

    // Unit-norm prototypes drawn hierarchically: shared appearance ->
    // look-alike family -> category.
    Vec shared = random_unit_vector(d, rng);
    const int n_families = (C + cfg.family_size - 1) / cfg.family_size;
    std::vector<Vec> family_bases(n_families);
    for (int f = 0; f < n_families; ++f) family_bases[f] = mix(shared, cfg.proto_correlation);
    std::vector<Vec> prototypes(C);
    for (int c = 0; c < C; ++c)
        prototypes[c] = mix(family_bases[c / cfg.family_size], cfg.family_correlation);

    // Category sampling weights: rank-based power law.
    std::vector<double> weights(C);
    double wsum = 0.0;
    for (int c = 0; c < C; ++c) {
        weights[c] = std::pow(double(c + 1), -cfg.power_exponent);
        wsum += weights[c];
    }
    for (auto& w : weights) w /= wsum;

    // Sigma knobs are relative to the prototype norm: a shift of
    // sigma_board moves a prototype by about that fraction of its length.
    // The bias range is relative to the per-dim feature magnitude.
    const double board_scale = cfg.sigma_board / std::sqrt(double(d));
    const double inst_scale = cfg.feature_scale * cfg.sigma_inst / std::sqrt(double(d));
    const double bias_scale = cfg.feature_scale / std::sqrt(double(d));
    if (cfg.feature_scale <= 0) throw ConfigError("synthetic: feature_scale must be positive");

    std::vector<BoardRecord> boards(cfg.n_boards);
    int id_width = cfg.n_boards > 1000 ? 5 : 3;
    for (int b = 0; b < cfg.n_boards; ++b) {
        BoardRecord& board = boards[b];
        std::string num = std::to_string(b);
        board.board_id = "b" + std::string(std::size_t(id_width) - std::min<std::size_t>(num.size(), id_width), '0') + num;
        board.width = 800.0 + 100.0 * double(rng.uniform_index(9));   // 800..1600
        board.height = 600.0 + 100.0 * double(rng.uniform_index(7));  // 600..1200

        // Per-board prototype shift and photometric gain/bias.
        std::vector<Vec> board_protos(C);
        for (int c = 0; c < C; ++c) {
            Vec p = prototypes[c];
            if (cfg.sigma_board > 0) {
                for (auto& x : p) x += board_scale * rng.normal();
                double n2 = 0.0;
                for (double x : p) n2 += x * x;
                if (n2 > 0) {
                    double inv = 1.0 / std::sqrt(n2);
                    for (auto& x : p) x *= inv;
                }
            }
            board_protos[c] = std::move(p);
        }
        // Photometric shift: a board-wide brightness factor drawn from the
        // gain range, per-dim variation shrunk toward it, and a shared
        // bias direction scaled from the bias range. A degenerate [1,1]
        // gain range yields exactly identity gains.
        const double brightness = rng.uniform(cfg.gain_min, cfg.gain_max);
        Vec gain(d), bias(d);
        for (int k = 0; k < d; ++k) {
            gain[k] = brightness + 0.25 * (rng.uniform(cfg.gain_min, cfg.gain_max) - brightness);
            bias[k] = bias_scale * rng.uniform(cfg.bias_min, cfg.bias_max);
        }

        // Multinomial category counts under the power-law weights.
        std::vector<int> counts(C, 0);
        for (int i = 0; i < cfg.instances_per_board; ++i) {
            double u = rng.uniform();
            double acc = 0.0;
            int chosen = C - 1;
            for (int c = 0; c < C; ++c) {
                acc += weights[c];
                if (u < acc) {
                    chosen = c;
                    break;
                }
            }
            ++counts[chosen];
        }

        // Lay instances out on a jittered grid so boxes rarely collide.
        const int total = cfg.instances_per_board;
        const int grid = int(std::ceil(std::sqrt(double(total))));
        std::vector<int> cells(std::size_t(grid) * grid);
        for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = int(i);
        for (std::size_t i = cells.size(); i > 1; --i)
            std::swap(cells[i - 1], cells[rng.uniform_index(i)]);

        int placed = 0;
        for (int c = 0; c < C; ++c) {
            for (int k = 0; k < counts[c]; ++k, ++placed) {
                ComponentInstance inst;
                inst.id = board.board_id + "_i" + std::to_string(placed);
                inst.category = synthetic_category_name(c);
                // Intra-class variation leans toward another category's
                // appearance (ambiguous parts), plus a small isotropic
                // residual; purely isotropic noise is too easy for a
                // learned metric to project away.
                double blend = 0.0;
                int other = c;
                if (cfg.sigma_inst > 0 && C > 1) {
                    blend = std::fabs(rng.normal()) * 2.0 * cfg.sigma_inst;
                    if (blend > 0.9) blend = 0.9;
                    other = int(rng.uniform_index(std::size_t(C - 1)));
                    if (other >= c) ++other;
                }
                inst.feature.resize(d);
                for (int f = 0; f < d; ++f) {
                    double proto = (1.0 - blend) * board_protos[c][f] +
                                   blend * board_protos[other][f];
                    double v = cfg.feature_scale * proto * gain[f] + bias[f];
                    if (cfg.sigma_inst > 0) v += 0.3 * inst_scale * rng.normal();
                    inst.feature[f] = v;
                }
                const int cell = cells[placed];
                const double cw = board.width / grid;
                const double ch = board.height / grid;
                const double cx = (cell % grid) * cw;
                const double cy = (cell / grid) * ch;
                double w = cw * rng.uniform(0.35, 0.8);
                double h = ch * rng.uniform(0.35, 0.8);
                double x1 = cx + rng.uniform(0.0, cw - w);
                double y1 = cy + rng.uniform(0.0, ch - h);
                inst.bbox = {x1, y1, x1 + w, y1 + h};
                board.instances.push_back(std::move(inst));
            }
        }

        if (cfg.proposals == ProposalMode::Perfect) {
            for (std::size_t i = 0; i < board.instances.size(); ++i) {
                ComponentInstance p;
                p.id = board.board_id + "_p" + std::to_string(i);
                p.bbox = board.instances[i].bbox;
                p.feature = board.instances[i].feature;
                p.score = 1.0;
                board.proposals.push_back(std::move(p));
            }
        } else if (cfg.proposals == ProposalMode::Noisy) {
            std::size_t pid = 0;
            for (const auto& inst : board.instances) {
                if (rng.uniform() < 0.08) continue;  // missed detection
                ComponentInstance p;
                p.id = board.board_id + "_p" + std::to_string(pid++);
                double w = inst.bbox.width(), h = inst.bbox.height();
                double dx = w * rng.uniform(-0.08, 0.08), dy = h * rng.uniform(-0.08, 0.08);
                double dw = w * rng.uniform(-0.1, 0.1), dh = h * rng.uniform(-0.1, 0.1);
                p.bbox = {std::max(0.0, inst.bbox.x1 + dx), std::max(0.0, inst.bbox.y1 + dy),
                          std::min(board.width, inst.bbox.x2 + dx + dw),
                          std::min(board.height, inst.bbox.y2 + dy + dh)};
                if (!p.bbox.well_ordered()) continue;
                p.feature = inst.feature;
                for (auto& v : p.feature) v += 0.02 * rng.normal();
                p.score = rng.uniform(0.35, 1.0);
                board.proposals.push_back(std::move(p));
            }
            // Spurious background proposals with unstructured features.
            int n_spurious = std::max(1, total / 10);
            for (int s = 0; s < n_spurious; ++s) {
                ComponentInstance p;
                p.id = board.board_id + "_p" + std::to_string(pid++);
                double w = board.width * rng.uniform(0.02, 0.08);
                double h = board.height * rng.uniform(0.02, 0.08);
                double x1 = rng.uniform(0.0, board.width - w);
                double y1 = rng.uniform(0.0, board.height - h);
                p.bbox = {x1, y1, x1 + w, y1 + h};
                p.feature.resize(d);
                for (auto& v : p.feature) v = 0.3 * rng.normal();
                p.score = rng.uniform(0.05, 0.7);
                board.proposals.push_back(std::move(p));
            }
        }
    }
    return boards;
}

Vec per_dim_feature_std(const std::vector<BoardRecord>& boards) {
    int d = 0;
    for (const auto& b : boards)
        if (b.feature_dim() > 0) {
            d = b.feature_dim();
            break;
        }
    if (d == 0) return {};
    Vec mean(d, 0.0), m2(d, 0.0);
    long n = 0;
    for (const auto& b : boards)
        for (const auto& inst : b.instances) {
            ++n;
            for (int k = 0; k < d; ++k) {
                double delta = inst.feature[k] - mean[k];
                mean[k] += delta / double(n);
                m2[k] += delta * (inst.feature[k] - mean[k]);
            }
        }
    Vec sd(d, 0.0);
    if (n > 1)
        for (int k = 0; k < d; ++k) sd[k] = std::sqrt(m2[k] / double(n - 1));
    return sd;
}

}  // namespace boardgraph
