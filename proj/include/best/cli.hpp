#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "best/experiment.hpp"
#include "best/serialize.hpp"

namespace best {

// BEST_SEED overrides any seed given on the command line
std::uint64_t seed_with_env(std::uint64_t seed);

struct FitOptions {
    std::string train_csv;
    std::string types_file;
    std::string policy_file;
    std::string response;  // header name, empty means the last column
    std::string strategy = "none";
    std::string measure = "gini";
    double beta = 5.0;
    int max_depth = 30;
    int pvi_iterations = 5;
    int max_surrogates = 5;
    bool prune = false;
    std::string val_csv;         // validation data for pruning
    double val_fraction = 0.25;  // holdout share when pruning without --val
    std::uint64_t seed = 0;
    std::string out_model = "model.best";
};

void cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err);

struct PredictOptions {
    std::string model_file;
    std::string data_csv;
    std::string out_file;  // empty prints the predictions
};

void cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& err);

struct ExperimentOptions {
    std::string censor = "mar_gate";
    std::vector<int> sizes;  // empty means {100, 500, 2000}
    int replicates = 20;
    bool full = false;  // sizes {100,500,2000,5000,20000}, 50 replicates
    int val_n = 500;
    int test_n = 2000;
    double noise = 0.3;
    double beta = 5.0;
    std::string measure = "gini";
    std::vector<std::string> strategies;  // empty means all six
    std::uint64_t seed = 0;
    int threads = 1;
    std::string target;  // predictor name, empty or "random" draws one
    std::string gate;
    int label = -1;
    std::string out_report = "experiment_report.txt";
};

void cmd_experiment(const ExperimentOptions& opt, std::ostream& out, std::ostream& err);

struct ImportanceOptions {
    int n = 1000;
    int n_trees = 50;
    int replicates = 20;
    double noise = 0.3;
    double beta = 50.0;
    std::string measure = "gini";
    std::uint64_t seed = 0;
    int threads = 1;
    std::string target = "auto";
    int label = -1;
    int mtry = 0;
    std::string out_report = "importance_report.txt";
};

void cmd_importance(const ImportanceOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace best
