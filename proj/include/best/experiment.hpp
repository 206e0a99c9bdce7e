#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "best/forest.hpp"
#include "best/simgen.hpp"
#include "best/tree.hpp"

namespace best {

// Benchmark matrix: replicates x training sizes x strategies under one
// censoring mechanism. Validation and test sets are censored with the
// training mechanism.
struct ExperimentConfig {
    CensorKind kind = CensorKind::mar_gate;
    std::vector<int> sizes = {100, 500, 2000};
    int replicates = 20;
    int val_n = 500;
    int test_n = 2000;
    double noise = 0.3;
    double beta = 5.0;
    Measure measure = Measure::gini;
    std::vector<StrategyTag> strategies;  // empty means all six
    std::uint64_t seed = 0;
    int threads = 1;
    int censor_target = -1;  // -1 draws per replicate; mar_gate defaults to x1
    int censor_gate = -1;    // mar_gate only, defaults to x5
    int censor_label = -1;   // mar_response only, -1 draws per replicate
    int pvi_iterations = 5;
    int max_surrogates = 5;
};

ExperimentConfig normalize(ExperimentConfig cfg);

struct ExperimentCell {
    double mean = 0.0;
    double sd = 0.0;  // n-1 denominator, 0 for a single replicate
    std::vector<double> accuracy;
};

struct ExperimentReport {
    ExperimentConfig cfg;                            // normalized
    std::vector<std::vector<ExperimentCell>> cells;  // [size][strategy]
};

// Accuracy per strategy for one replicate of the pipeline: sample truth and
// train/val/test, resolve the censor spec on train, censor all three sets
// identically, fit each strategy with validation-selected pruning, score on
// test.
std::vector<double> run_replicate(const ExperimentConfig& cfg, int n, int replicate);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

std::string render_report(const ExperimentReport& rep);   // aligned text
std::string render_sidecar(const ExperimentReport& rep);  // comma-delimited

// Forest importance benchmark: a weak predictor censored dependent on the
// response, one forest per strategy in {complete, SC, BEST}.
struct ImportanceConfig {
    int n = 1000;
    int n_trees = 50;
    int replicates = 20;
    double noise = 0.3;
    double beta = 50.0;  // stiff stopping keeps noise splits from blurring the contrast
    Measure measure = Measure::gini;
    std::uint64_t seed = 0;
    int threads = 1;
    int target = -1;  // -1 censors the least important predictor of the complete forest
    int label = -1;   // -1 draws per seed
    int mtry = 0;
};

struct ImportanceSeedResult {
    int target = -1;
    ImportanceReport complete;
    ImportanceReport sc;
    ImportanceReport best;
};

ImportanceSeedResult run_importance_seed(const ImportanceConfig& cfg, int replicate);

struct ImportanceSummary {
    ImportanceConfig cfg;
    std::vector<ImportanceSeedResult> seeds;
};

ImportanceSummary run_importance(const ImportanceConfig& cfg);

std::string render_importance(const ImportanceSummary& sum);   // aligned text
std::string render_importance_sidecar(const ImportanceSummary& sum);

}  // namespace best
