#include "best/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "best/csv.hpp"
#include "best/rng.hpp"

namespace best {

namespace {

std::string four(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

void flush_warnings(const Diagnostics& diag, std::ostream& err) {
    for (const auto& w : diag.warnings) err << "warning: " << w << "\n";
}

Dataset subset_rows(const Dataset& ds, const std::vector<int>& rows) {
    std::vector<Dataset::Column> cols(static_cast<std::size_t>(ds.m()));
    for (int j = 0; j < ds.m(); ++j) {
        const auto& src = ds.column(j);
        auto& dst = cols[static_cast<std::size_t>(j)];
        const bool numeric = ds.schema().predictors[static_cast<std::size_t>(j)].kind ==
                             PredictorKind::numeric;
        for (int i : rows) {
            if (numeric)
                dst.num.push_back(src.num[static_cast<std::size_t>(i)]);
            else
                dst.cat.push_back(src.cat[static_cast<std::size_t>(i)]);
            dst.obs.push_back(src.obs[static_cast<std::size_t>(i)]);
        }
    }
    std::vector<int> response;
    if (ds.has_response()) {
        response.reserve(rows.size());
        for (int i : rows) response.push_back(ds.response(i));
    }
    std::vector<double> weights;
    weights.reserve(rows.size());
    for (int i : rows) weights.push_back(ds.weight(i));
    return Dataset::from_columns(ds.schema(), std::move(cols), std::move(response),
                                 std::move(weights));
}

int predictor_index(const std::string& name) {
    if (name.empty() || name == "random") return -1;
    Schema schema = simgen_schema();
    int j = schema.index_of(name);
    if (j < 0) throw Error(ErrorKind::schema, "unknown predictor '" + name + "'");
    return j;
}

}  // namespace

std::uint64_t seed_with_env(std::uint64_t seed) {
    const char* env = std::getenv("BEST_SEED");
    if (!env || !*env) return seed;
    std::uint64_t v = 0;
    const char* end = env + std::string_view(env).size();
    auto res = std::from_chars(env, end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw Error(ErrorKind::schema, "BEST_SEED must be an unsigned integer");
    return v;
}

void cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err) {
    Diagnostics diag;
    CsvTable table = read_csv(opt.train_csv);
    CsvOptions copt;
    copt.response = opt.response;
    if (!opt.types_file.empty())
        copt.type_overrides = parse_types_file(read_text_file(opt.types_file), opt.types_file);
    Dataset full = dataset_from_csv(table, copt, &diag);

    AvailabilityPolicy user =
        opt.policy_file.empty()
            ? compile_availability(PolicyDesc{}, full.schema(), &diag)
            : compile_availability(parse_policy_text(read_text_file(opt.policy_file)),
                                   full.schema(), &diag);
    Strategy strat;
    strat.tag = parse_strategy(opt.strategy);
    strat.pvi_iterations = opt.pvi_iterations;
    strat.max_surrogates = opt.max_surrogates;
    const Measure measure = parse_measure(opt.measure);
    const std::uint64_t seed = seed_with_env(opt.seed);

    Dataset train = full;
    Dataset val;
    bool have_val = false;
    if (opt.prune) {
        if (!opt.val_csv.empty()) {
            val = dataset_for_schema(read_csv(opt.val_csv), full.schema(), copt.missing_tokens);
            if (!val.has_response())
                throw Error(ErrorKind::schema, "validation data needs a response column");
            have_val = true;
        } else {
            const int n = full.n();
            int nv = static_cast<int>(opt.val_fraction * n + 0.5);
            nv = std::max(nv, 1);
            if (n - nv < 1)
                throw Error(ErrorKind::schema, "not enough rows to hold out validation data");
            Rng rng(derive_seed(seed, "valsplit"));
            std::vector<int> perm = rng.sample_without_replacement(n, n);
            std::vector<int> val_rows(perm.begin(), perm.begin() + nv);
            std::vector<int> train_rows(perm.begin() + nv, perm.end());
            std::sort(val_rows.begin(), val_rows.end());
            std::sort(train_rows.begin(), train_rows.end());
            val = subset_rows(full, val_rows);
            train = subset_rows(full, train_rows);
            have_val = true;
        }
    }

    FittedTransform ft = fit_transform(strat, train, user, &diag);
    FitConfig fc;
    fc.beta = opt.beta;
    fc.measure = measure;
    fc.max_depth = opt.max_depth;
    fc.strategy = strat;
    Tree tree = fit(ft.train, fc, ft.policy, &diag);
    if (opt.prune && have_val) {
        PruneSequence seq = prune_sequence(tree);
        Dataset val_t = apply_transform(ft.state, ft.train.schema(), val, &diag);
        tree = select_by_validation(seq, val_t);
    }

    Model model;
    model.input_schema = full.schema();
    model.model_schema = ft.train.schema();
    model.state = ft.state;
    model.policy = ft.policy;
    model.tree = std::move(tree);
    save_model(model, opt.out_model);

    flush_warnings(diag, err);
    out << "model written to " << opt.out_model << "\n";
    out << "leaves " << model.tree.n_leaves() << "  depth " << model.tree.height()
        << "  training loss " << four(empirical_loss(model.tree, ft.train)) << "\n";
}

void cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& err) {
    Diagnostics diag;
    Model model = load_model(opt.model_file);
    CsvTable table = read_csv(opt.data_csv);
    Dataset raw = dataset_for_schema(table, model.input_schema, CsvOptions{}.missing_tokens);
    Dataset data = apply_transform(model.state, model.model_schema, raw, &diag);

    std::string preds;
    double hit = 0.0, total = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        int c = model.is_forest ? predict_forest(model.forest, data, i)
                                : predict_class(model.tree, data, i);
        preds += model.model_schema.response_labels[static_cast<std::size_t>(c)];
        preds += "\n";
        if (data.has_response()) {
            total += data.weight(i);
            if (c == data.response(i)) hit += data.weight(i);
        }
    }
    flush_warnings(diag, err);
    if (opt.out_file.empty()) {
        out << preds;
    } else {
        write_text_file(opt.out_file, preds);
        out << "predictions written to " << opt.out_file << "\n";
    }
    if (data.has_response() && total > 0.0) out << "accuracy " << four(hit / total) << "\n";
}

void cmd_experiment(const ExperimentOptions& opt, std::ostream& out, std::ostream& err) {
    (void)err;
    ExperimentConfig cfg;
    cfg.kind = parse_censor(opt.censor);
    if (!opt.sizes.empty()) cfg.sizes = opt.sizes;
    cfg.replicates = opt.replicates;
    if (opt.full) {
        cfg.sizes = {100, 500, 2000, 5000, 20000};
        cfg.replicates = 50;
    }
    cfg.val_n = opt.val_n;
    cfg.test_n = opt.test_n;
    cfg.noise = opt.noise;
    cfg.beta = opt.beta;
    cfg.measure = parse_measure(opt.measure);
    for (const auto& name : opt.strategies) cfg.strategies.push_back(parse_strategy(name));
    cfg.seed = seed_with_env(opt.seed);
    cfg.threads = opt.threads;
    cfg.censor_target = predictor_index(opt.target);
    cfg.censor_gate = predictor_index(opt.gate);
    cfg.censor_label = opt.label;

    ExperimentReport rep = run_experiment(cfg);
    std::string text = render_report(rep);
    write_text_file(opt.out_report, text);
    write_text_file(opt.out_report + ".csv", render_sidecar(rep));
    out << text;
    out << "report written to " << opt.out_report << " and " << opt.out_report << ".csv\n";
}

void cmd_importance(const ImportanceOptions& opt, std::ostream& out, std::ostream& err) {
    (void)err;
    ImportanceConfig cfg;
    cfg.n = opt.n;
    cfg.n_trees = opt.n_trees;
    cfg.replicates = opt.replicates;
    cfg.noise = opt.noise;
    cfg.beta = opt.beta;
    cfg.measure = parse_measure(opt.measure);
    cfg.seed = seed_with_env(opt.seed);
    cfg.threads = opt.threads;
    cfg.target = opt.target == "auto" ? -1 : predictor_index(opt.target);
    if (opt.target == "random")
        throw Error(ErrorKind::schema, "importance target must be a predictor name or 'auto'");
    cfg.label = opt.label;
    cfg.mtry = opt.mtry;

    ImportanceSummary sum = run_importance(cfg);
    std::string text = render_importance(sum);
    write_text_file(opt.out_report, text);
    write_text_file(opt.out_report + ".csv", render_importance_sidecar(sum));
    out << text;
    out << "report written to " << opt.out_report << " and " << opt.out_report << ".csv\n";
}

}  // namespace best
