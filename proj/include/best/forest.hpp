#pragma once

#include <string>
#include <vector>

#include "best/tree.hpp"

namespace best {

struct ForestConfig {
    int n_trees = 100;
    int mtry = 0;  // 0 defaults to ceil(sqrt(#root-available predictors))
    bool bootstrap = true;
    double beta = 5.0;
    Measure measure = Measure::gini;
    std::uint64_t seed = 0;
    Strategy strategy;
    int max_depth = 30;
    int threads = 1;
};

struct Forest {
    std::vector<Tree> trees;
    std::vector<std::uint64_t> seeds;
    ForestConfig cfg;
    std::string schema_fp;
};

Forest fit_forest(const Dataset& ds, const AvailabilityPolicy& policy, const ForestConfig& cfg,
                  Diagnostics* diag = nullptr);

int predict_forest(const Forest& f, const Dataset& ds, int row);
double forest_accuracy(const Forest& f, const Dataset& ds);

struct ImportanceReport {
    std::vector<std::string> names;
    std::vector<double> total;     // summed impurity decrease over every node of every tree
    std::vector<double> per_tree;  // total / n_trees
};

ImportanceReport gini_importance(const Forest& f, const Schema& schema);

}  // namespace best
