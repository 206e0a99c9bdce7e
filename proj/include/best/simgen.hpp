#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "best/data.hpp"
#include "best/splitting.hpp"

namespace best {

// x1..x4 standard normal, x5..x8 categorical with levels {a,b,c,d},
// four response labels "0".."3"
Schema simgen_schema();

struct TruthNode {
    bool is_leaf = false;
    int label = 0;
    Split split;
    int left = -1;
    int right = -1;
};

struct GroundTruthTree {
    std::vector<TruthNode> nodes;  // preorder, complete to depth 4
    int gate = -1;   // set by the gated sampler, -1 otherwise
    int target = -1;
};

GroundTruthTree sample_truth(std::uint64_t seed);

// Variant used by the MAR-by-predictor benchmark: the root splits `gate` into
// its lower half of categories versus the rest and `target` appears only in
// the right half, where its split puts the label pair {0,1} below and {2,3}
// above. The masked half carries the pair {2,3} behind further gate splits,
// so pooling it with the observed high side flattens the marginals.
GroundTruthTree sample_truth_gated(std::uint64_t seed, int gate, int target);

// Predictor of the requested kind with the largest depth-discounted use in
// the truth (weight 2^-depth per split), -1 if the kind never splits.
int dominant_predictor(const GroundTruthTree& truth, PredictorKind kind);

// Anchor for value-dependent censoring of a categorical predictor: the
// truth cut most worth recovering, and the level set to censor so that the
// missingness indicator reproduces that cut inside its region. When one
// side of the cut is a single level everything else is censored; otherwise
// the whole left side is, which keeps the indicator exact at the cost of
// leaving two levels observed.
struct CensorAnchor {
    int predictor = -1;
    std::vector<int> censored;
};
CensorAnchor pick_censor_anchor(const GroundTruthTree& truth);

// nums holds the four numeric draws, cats the four category codes
int truth_label(const GroundTruthTree& truth, const double* nums, const int* cats);

Dataset sample_dataset(const GroundTruthTree& truth, int n, double noise, std::uint64_t seed);

enum class CensorKind : std::uint8_t { mar_gate, mar_response, mnar_numeric, mnar_categorical };

CensorKind parse_censor(std::string_view name);
std::string censor_name(CensorKind kind);

struct CensorSpec {
    CensorKind kind = CensorKind::mar_gate;
    std::uint64_t seed = 0;
    int target = -1;              // -1 draws one compatible with the kind
    int gate = -1;                // MAR_GATE: fully observed categorical driver
    int label = -1;               // MAR_RESPONSE: class whose rows lose the target
    bool above = false;           // MNAR_NUMERIC: which side of the threshold is masked
    double threshold = 0.0;
    bool has_threshold = false;
    std::vector<int> categories;  // MNAR_CATEGORICAL: masked codes, ascending
    bool resolved = false;
};

// Draws every unset field from the training data, deterministically in
// spec.seed. The resolved spec can then censor train, validation and test
// sets identically.
CensorSpec resolve_censor(const CensorSpec& spec, const Dataset& train);

// Masks target cells selected by the spec. Values, response, weights and row
// count are untouched; only the observed mask changes.
Dataset censor(const Dataset& ds, const CensorSpec& spec);

}  // namespace best
