#pragma once

// Board/annotation data model, file ingestion and the synthetic board
// generator used for desk-scale verification. Boards are stored one per
// JSON file with features embedded, so nothing here touches images.

#include <filesystem>
#include <string>
#include <vector>

#include "boardgraph/linalg.hpp"

namespace boardgraph {

struct Bbox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    bool well_ordered() const { return x2 > x1 && y2 > y1; }
};

struct ComponentInstance {
    std::string id;
    std::string category;  // empty for unclassified proposals
    Bbox bbox;
    Vec feature;
    double score = 1.0;  // 1.0 for ground truth, proposer score otherwise
};

struct BoardRecord {
    std::string board_id;
    double width = 0;
    double height = 0;
    std::vector<ComponentInstance> instances;  // ground truth
    std::vector<ComponentInstance> proposals;  // optional, category empty

    int feature_dim() const {
        if (!instances.empty()) return int(instances[0].feature.size());
        if (!proposals.empty()) return int(proposals[0].feature.size());
        return 0;
    }
};

// Sorted category vocabulary of a dataset.
struct CategoryIndex {
    std::vector<std::string> names;

    static CategoryIndex from_boards(const std::vector<BoardRecord>& boards);
    int index_of(const std::string& name) const;
    int size() const { return int(names.size()); }
};

BoardRecord load_board(const std::filesystem::path& path);
void save_board(const BoardRecord& board, const std::filesystem::path& path);

// Loads every board file in a directory (files without a "board_id" key
// are ignored), sorted by filename. Checks board_id uniqueness and that
// feature dimensions agree across the whole dataset.
std::vector<BoardRecord> load_dataset(const std::filesystem::path& dir);

enum class ProposalMode { None, Perfect, Noisy };

ProposalMode proposal_mode_from_string(const std::string& s);
const char* to_string(ProposalMode m);

// Knobs for the synthetic generator. sigma_inst < sigma_board encodes that
// same-type components look most alike on the same board; per-board
// brightness gains and biases model the photography/domain shift between
// boards. Category prototypes are drawn hierarchically: a direction shared
// by everything (proto_correlation), then look-alike families of
// family_size categories (family_correlation), reproducing the low
// inter-class variance of real component imagery, where many part types
// are near-indistinguishable.
struct SyntheticConfig {
    int n_boards = 60;
    int n_categories = 12;
    int feature_dim = 64;
    int instances_per_board = 40;
    double power_exponent = 1.0;  // category imbalance; counts ~ (rank+1)^-a
    double sigma_board = 0.4;     // cross-board prototype shift
    double sigma_inst = 0.1;      // within-board spread
    double proto_correlation = 0.6;   // in [0,1); cos between family bases
    double family_correlation = 0.9;  // in [0,1); cos within a family
    int family_size = 3;              // categories per look-alike family
    double feature_scale = 4.0;       // prototype norm (CNN pooled-feature-like)
    double gain_min = 0.85, gain_max = 1.15;
    double bias_min = -0.1, bias_max = 0.1;
    ProposalMode proposals = ProposalMode::None;
    std::uint64_t seed = 0;
};

std::vector<BoardRecord> generate_synthetic_dataset(const SyntheticConfig& cfg);

// Category display names used by the generator.
std::string synthetic_category_name(int index);

// Per-dimension standard deviation over all ground-truth features; the
// basis for feature-space jitter scales.
Vec per_dim_feature_std(const std::vector<BoardRecord>& boards);

}  // namespace boardgraph
