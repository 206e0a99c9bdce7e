#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "best/availability.hpp"
#include "best/data.hpp"
#include "best/splitting.hpp"

namespace best {

enum class StrategyTag : std::uint8_t { none, dbi, svi, pvi, sc, surrogate, best };

StrategyTag parse_strategy(std::string_view name);
std::string strategy_name(StrategyTag tag);   // flag spelling
std::string strategy_label(StrategyTag tag);  // report spelling

struct Strategy {
    StrategyTag tag = StrategyTag::none;
    int pvi_iterations = 5;
    int max_surrogates = 5;
};

inline constexpr const char* kMissingCategory = "⟨missing⟩";

Dataset svi_transform(const Dataset& ds);
Dataset pvi_transform(const Dataset& ds, int iterations);
Dataset sc_transform(const Dataset& ds, Diagnostics* diag = nullptr);
std::pair<Dataset, AvailabilityPolicy> best_transform(const Dataset& ds,
                                                      const AvailabilityPolicy& user_policy);

struct SurrogateRule {
    Split split;
    bool mirrored = false;  // rule sends its left side to the primary's right
    double agreement = 0.0;
};

struct SurrogateList {
    std::vector<SurrogateRule> rules;
    bool fallback_right = false;
};

// true when the split sends this observation left; the split value must be observed
bool split_goes_left(const Dataset& ds, const Split& split, int row);

SurrogateList build_surrogates(const Dataset& ds, const Region& region, const Split& primary,
                               int max_s);

// Observed rows go wholly to their side; rows missing the split value are
// copied to both children with weights scaled by the observed proportions.
// Child masks are inherited unchanged; callers relying on unlock rules
// overwrite them.
std::pair<Region, Region> dbi_route_fit(const Dataset& ds, const Region& region, const Split& split);

// State captured on the training set so validation and test data receive the
// same transform the model was fitted on.
struct TransformState {
    StrategyTag tag = StrategyTag::none;
    int pvi_iterations = 5;
    std::vector<double> fill_num;            // training means, numeric columns
    std::vector<int> fill_cat;               // training modes, categorical columns
    std::vector<double> sentinel;            // sc sentinels, numeric columns
    std::vector<std::uint8_t> sc_extended;   // sc: column gained the missing category
    std::vector<std::string> gated;          // best: auto-gated predictor names, in order
};

struct FittedTransform {
    Dataset train;
    AvailabilityPolicy policy;
    TransformState state;
};

FittedTransform fit_transform(const Strategy& strategy, const Dataset& train,
                              const AvailabilityPolicy& user_policy, Diagnostics* diag = nullptr);

Dataset apply_transform(const TransformState& state, const Schema& model_schema, const Dataset& ds,
                        Diagnostics* diag = nullptr);

}  // namespace best
