#include <iostream>

#include "CLI11.hpp"
#include "best/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"branch-exclusive split trees"};
    app.require_subcommand(1);

    best::FitOptions fit;
    CLI::App* cf = app.add_subcommand("fit", "fit a classification tree on a csv");
    cf->add_option("train", fit.train_csv, "training csv")->required();
    cf->add_option("--types", fit.types_file, "column type override file");
    cf->add_option("--policy", fit.policy_file, "availability policy file");
    cf->add_option("--response", fit.response, "response column name (default: last column)");
    cf->add_option("--strategy", fit.strategy,
                   "missing value strategy: none|dbi|svi|pvi|sc|surrogate|best");
    cf->add_option("--measure", fit.measure, "impurity: gini|deviance|misclassification");
    cf->add_option("--beta", fit.beta, "minimum region weight to keep splitting");
    cf->add_option("--max-depth", fit.max_depth, "depth cap");
    cf->add_option("--pvi-iterations", fit.pvi_iterations, "chained imputation rounds");
    cf->add_option("--max-surrogates", fit.max_surrogates, "surrogates kept per node");
    cf->add_flag("--prune", fit.prune, "cost-complexity pruning with validation selection");
    cf->add_option("--val", fit.val_csv, "validation csv for pruning");
    cf->add_option("--val-fraction", fit.val_fraction, "holdout share when --val is absent");
    cf->add_option("--seed", fit.seed, "seed for the validation holdout");
    cf->add_option("--out", fit.out_model, "model file to write");

    best::PredictOptions pred;
    CLI::App* cp = app.add_subcommand("predict", "score a csv with a saved model");
    cp->add_option("model", pred.model_file, "model file")->required();
    cp->add_option("data", pred.data_csv, "csv to score")->required();
    cp->add_option("--out", pred.out_file, "write predictions here instead of stdout");

    best::ExperimentOptions exp;
    CLI::App* ce = app.add_subcommand("experiment", "simulation benchmark matrix");
    ce->add_option("--censor", exp.censor,
                   "mar_gate|mar_response|mnar_numeric|mnar_categorical");
    ce->add_option("--sizes", exp.sizes, "training sizes");
    ce->add_option("--replicates", exp.replicates, "replicates per size");
    ce->add_flag("--full", exp.full, "paper-scale sizes and 50 replicates");
    ce->add_option("--val-n", exp.val_n, "validation size");
    ce->add_option("--test-n", exp.test_n, "test size");
    ce->add_option("--noise", exp.noise, "leaf label noise rate");
    ce->add_option("--beta", exp.beta, "minimum region weight to keep splitting");
    ce->add_option("--measure", exp.measure, "impurity: gini|deviance|misclassification");
    ce->add_option("--strategies", exp.strategies, "subset of dbi svi pvi sc surrogate best");
    ce->add_option("--seed", exp.seed, "master seed");
    ce->add_option("--threads", exp.threads, "replicate-level workers");
    ce->add_option("--target", exp.target, "censored predictor (name or 'random')");
    ce->add_option("--gate", exp.gate, "mar_gate driver predictor");
    ce->add_option("--label", exp.label, "mar_response class index");
    ce->add_option("--out", exp.out_report, "report file to write");

    best::ImportanceOptions imp;
    CLI::App* ci = app.add_subcommand("importance", "forest importance under censoring");
    ci->add_option("--n", imp.n, "training size");
    ci->add_option("--trees", imp.n_trees, "trees per forest");
    ci->add_option("--replicates", imp.replicates, "seeded repetitions");
    ci->add_option("--noise", imp.noise, "leaf label noise rate");
    ci->add_option("--beta", imp.beta, "minimum region weight to keep splitting");
    ci->add_option("--measure", imp.measure, "impurity: gini|deviance|misclassification");
    ci->add_option("--seed", imp.seed, "master seed");
    ci->add_option("--threads", imp.threads, "replicate-level workers");
    ci->add_option("--target", imp.target, "censored predictor, auto = least important");
    ci->add_option("--label", imp.label, "mar_response class index");
    ci->add_option("--mtry", imp.mtry, "candidate predictors per node, 0 = sqrt rule");
    ci->add_option("--out", imp.out_report, "report file to write");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cf->parsed()) best::cmd_fit(fit, std::cout, std::cerr);
        if (cp->parsed()) best::cmd_predict(pred, std::cout, std::cerr);
        if (ce->parsed()) best::cmd_experiment(exp, std::cout, std::cerr);
        if (ci->parsed()) best::cmd_importance(imp, std::cout, std::cerr);
    } catch (const best::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
