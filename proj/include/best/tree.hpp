#pragma once

#include <string>
#include <vector>

#include "best/availability.hpp"
#include "best/data.hpp"
#include "best/missing.hpp"
#include "best/rng.hpp"
#include "best/splitting.hpp"

namespace best {

struct TreeNode {
    bool is_leaf = true;
    Split split;
    int left = -1;
    int right = -1;
    std::vector<SurrogateRule> surrogates;
    bool fallback_right = false;  // heavier child receives missing values at prediction
    int label = 0;
    ClassHistogram distribution;
    double count = 0.0;
    double node_impurity = 0.0;
    std::vector<std::uint8_t> available;
    int depth = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // preorder, root first
    std::string schema_fp;
    std::string policy_fp;
    double beta = 5.0;
    Measure measure = Measure::gini;
    StrategyTag strategy = StrategyTag::none;
    double dropped_weight = 0.0;  // training weight excluded at internal nodes

    const TreeNode& root() const { return nodes.front(); }
    int n_leaves() const;
    int height() const;  // depth of the deepest node
};

struct FitConfig {
    double beta = 5.0;
    Measure measure = Measure::gini;
    int max_depth = 30;
    Strategy strategy;
    int mtry = 0;             // 0 considers every available predictor
    Rng* mtry_rng = nullptr;  // consulted only when a node has more than mtry candidates
    const std::vector<double>* root_weights = nullptr;  // bootstrap weights; zero drops the row
};

enum class StopReason : std::uint8_t { grow, c1, c2, c3 };

StopReason check_stopping(const Region& region, double beta, const Dataset& ds);

Tree fit(const Dataset& ds, const FitConfig& cfg, const AvailabilityPolicy& policy,
         Diagnostics* diag = nullptr);

int predict_class(const Tree& t, const Dataset& ds, int row);
std::vector<double> predict_distribution(const Tree& t, const Dataset& ds, int row);
double empirical_loss(const Tree& t, const Dataset& ds);

struct PruneSequence {
    std::vector<double> alphas;  // strictly increasing, starts at 0
    std::vector<Tree> subtrees;
};

PruneSequence prune_sequence(const Tree& t);
const Tree& select_by_validation(const PruneSequence& seq, const Dataset& val);

// number of splits on predictors that were not available at that node under
// a fresh replay of the policy down every path
int audit_gating(const Tree& t, const AvailabilityPolicy& policy, const Schema& schema);

// total training weight present at a depth; leaves keep their weight at
// every depth below their own
double weight_at_depth(const Tree& t, int depth);

}  // namespace best
