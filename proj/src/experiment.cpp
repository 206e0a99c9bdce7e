#include "best/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "best/rng.hpp"

namespace best {

namespace {

AvailabilityPolicy trivial_policy(const Schema& schema) {
    return compile_availability(PolicyDesc{}, schema);
}

// User policy for the gated benchmark: the target starts locked and opens in
// branches confined to the upper half of the gate's categories, mirroring the
// censoring (the target is observed exactly there).
AvailabilityPolicy gate_policy(const Schema& schema, int gate, int target) {
    PolicyDesc pd;
    pd.has_root = true;
    for (int j = 0; j < schema.m(); ++j)
        if (j != target) pd.root.push_back(schema.predictors[j].name);
    RuleDesc rd;
    rd.gate = schema.predictors[gate].name;
    rd.target = schema.predictors[target].name;
    rd.cond.numeric = false;
    const auto& cats = schema.predictors[gate].categories;
    for (std::size_t c = cats.size() / 2; c < cats.size(); ++c)
        rd.cond.categories.push_back(cats[c]);
    pd.rules.push_back(std::move(rd));
    return compile_availability(pd, schema);
}

double strategy_accuracy(StrategyTag tag, const ExperimentConfig& cfg, const Dataset& train_c,
                         const Dataset& val_c, const Dataset& test_c,
                         const AvailabilityPolicy& user_policy) {
    Strategy strat;
    strat.tag = tag;
    strat.pvi_iterations = cfg.pvi_iterations;
    strat.max_surrogates = cfg.max_surrogates;
    FittedTransform ft = fit_transform(strat, train_c, user_policy);
    FitConfig fc;
    fc.beta = cfg.beta;
    fc.measure = cfg.measure;
    fc.strategy = strat;
    Tree grown = fit(ft.train, fc, ft.policy);
    PruneSequence seq = prune_sequence(grown);
    Dataset val_t = apply_transform(ft.state, ft.train.schema(), val_c);
    const Tree& chosen = select_by_validation(seq, val_t);
    Dataset test_t = apply_transform(ft.state, ft.train.schema(), test_c);
    return 1.0 - empirical_loss(chosen, test_t);
}

std::string four(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string size_list(const std::vector<int>& sizes) {
    std::string s;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(sizes[i]);
    }
    return s;
}

std::string predictor_or_random(int j) {
    if (j < 0) return "random";
    return simgen_schema().predictors[static_cast<std::size_t>(j)].name;
}

std::string config_header(const ExperimentConfig& cfg, const char* comment) {
    std::ostringstream out;
    out << comment << " censor=" << censor_name(cfg.kind)
        << " target=" << predictor_or_random(cfg.censor_target);
    if (cfg.kind == CensorKind::mar_gate)
        out << " gate=" << predictor_or_random(cfg.censor_gate);
    if (cfg.kind == CensorKind::mar_response)
        out << " label=" << (cfg.censor_label < 0 ? std::string("random")
                                                  : std::to_string(cfg.censor_label));
    out << "\n";
    out << comment << " sizes=" << size_list(cfg.sizes) << " replicates=" << cfg.replicates
        << " val=" << cfg.val_n << " test=" << cfg.test_n << "\n";
    out << comment << " noise=" << format_double(cfg.noise) << " beta=" << format_double(cfg.beta)
        << " measure=" << measure_name(cfg.measure) << " seed=" << cfg.seed
        << " threads=" << cfg.threads << "\n";
    out << comment << " strategies=";
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
        if (s) out << ",";
        out << strategy_label(cfg.strategies[s]);
    }
    out << "\n";
    out << comment << " validation and test sets are censored with the training mechanism\n";
    return out.str();
}

}  // namespace

ExperimentConfig normalize(ExperimentConfig cfg) {
    if (cfg.strategies.empty())
        cfg.strategies = {StrategyTag::dbi, StrategyTag::svi, StrategyTag::pvi,
                          StrategyTag::sc,  StrategyTag::surrogate, StrategyTag::best};
    if (cfg.kind == CensorKind::mar_gate) {
        if (cfg.censor_target < 0) cfg.censor_target = 0;  // x1
        if (cfg.censor_gate < 0) cfg.censor_gate = 4;      // x5
    }
    if (cfg.sizes.empty()) throw Error(ErrorKind::schema, "experiment needs at least one size");
    for (int n : cfg.sizes)
        if (n < 1) throw Error(ErrorKind::schema, "training sizes must be positive");
    if (cfg.replicates < 1) throw Error(ErrorKind::schema, "replicates must be positive");
    if (cfg.val_n < 1 || cfg.test_n < 1)
        throw Error(ErrorKind::schema, "validation and test sizes must be positive");
    return cfg;
}

std::vector<double> run_replicate(const ExperimentConfig& cfg0, int n, int replicate) {
    ExperimentConfig cfg = normalize(cfg0);
    const std::uint64_t rep_seed =
        derive_seed(cfg.seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replicate)});
    GroundTruthTree truth =
        cfg.kind == CensorKind::mar_gate
            ? sample_truth_gated(derive_seed(rep_seed, "truth"), cfg.censor_gate, cfg.censor_target)
            : sample_truth(derive_seed(rep_seed, "truth"));
    Dataset train = sample_dataset(truth, n, cfg.noise, derive_seed(rep_seed, "train"));
    Dataset val = sample_dataset(truth, cfg.val_n, cfg.noise, derive_seed(rep_seed, "val"));
    Dataset test = sample_dataset(truth, cfg.test_n, cfg.noise, derive_seed(rep_seed, "test"));

    CensorSpec spec;
    spec.kind = cfg.kind;
    spec.seed = derive_seed(rep_seed, "censor");
    spec.target = cfg.censor_target;
    spec.gate = cfg.censor_gate;
    spec.label = cfg.censor_label;
    // An unspecified MNAR target falls on the predictor the truth leans on
    // most, so the strategy contrast is measured where masking has teeth.
    if (spec.target < 0 && cfg.kind == CensorKind::mnar_numeric)
        spec.target = dominant_predictor(truth, PredictorKind::numeric);
    if (spec.target < 0 && cfg.kind == CensorKind::mnar_categorical) {
        // Censor the level set whose missing pattern carries the most
        // valuable truth cut; a filled-in column recovers little of it.
        CensorAnchor anchor = pick_censor_anchor(truth);
        spec.target = anchor.predictor;
        if (anchor.predictor >= 0 && spec.categories.empty())
            spec.categories = std::move(anchor.censored);
    }
    CensorSpec resolved = resolve_censor(spec, train);
    Dataset train_c = censor(train, resolved);
    Dataset val_c = censor(val, resolved);
    Dataset test_c = censor(test, resolved);

    const Schema& schema = train_c.schema();
    AvailabilityPolicy trivial = trivial_policy(schema);
    std::vector<double> acc;
    acc.reserve(cfg.strategies.size());
    for (StrategyTag tag : cfg.strategies) {
        const bool gated = tag == StrategyTag::best && cfg.kind == CensorKind::mar_gate;
        AvailabilityPolicy user =
            gated ? gate_policy(schema, resolved.gate, resolved.target) : trivial;
        acc.push_back(strategy_accuracy(tag, cfg, train_c, val_c, test_c, user));
    }
    return acc;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg0) {
    ExperimentConfig cfg = normalize(cfg0);
    const std::size_t n_sizes = cfg.sizes.size();
    const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
    std::vector<std::vector<std::vector<double>>> acc(
        n_sizes, std::vector<std::vector<double>>(reps));
    parallel_for(n_sizes * reps, static_cast<unsigned>(cfg.threads), [&](std::size_t task) {
        std::size_t si = task / reps;
        std::size_t r = task % reps;
        acc[si][r] = run_replicate(cfg, cfg.sizes[si], static_cast<int>(r));
    });

    ExperimentReport rep;
    rep.cfg = cfg;
    rep.cells.assign(n_sizes, std::vector<ExperimentCell>(cfg.strategies.size()));
    for (std::size_t si = 0; si < n_sizes; ++si) {
        for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
            ExperimentCell& cell = rep.cells[si][s];
            cell.accuracy.resize(reps);
            double sum = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                cell.accuracy[r] = acc[si][r][s];
                sum += cell.accuracy[r];
            }
            cell.mean = sum / static_cast<double>(reps);
            if (reps > 1) {
                double ss = 0.0;
                for (double a : cell.accuracy) ss += (a - cell.mean) * (a - cell.mean);
                cell.sd = std::sqrt(ss / static_cast<double>(reps - 1));
            }
        }
    }
    return rep;
}

std::string render_report(const ExperimentReport& rep) {
    std::ostringstream out;
    out << "# benchmark report\n" << config_header(rep.cfg, "#");
    out << "\n";
    std::size_t w = 8;
    for (StrategyTag t : rep.cfg.strategies) w = std::max(w, strategy_label(t).size());
    std::string head = "strategy";
    head.append(w - head.size(), ' ');
    out << "  size  " << head << "    mean      sd\n";
    for (std::size_t si = 0; si < rep.cells.size(); ++si) {
        for (std::size_t s = 0; s < rep.cfg.strategies.size(); ++s) {
            char line[128];
            std::string label = strategy_label(rep.cfg.strategies[s]);
            label.append(w - label.size(), ' ');
            std::snprintf(line, sizeof(line), "%6d  %s  %s  %s\n", rep.cfg.sizes[si],
                          label.c_str(), four(rep.cells[si][s].mean).c_str(),
                          four(rep.cells[si][s].sd).c_str());
            out << line;
        }
    }
    return out.str();
}

std::string render_sidecar(const ExperimentReport& rep) {
    std::ostringstream out;
    out << "# benchmark report\n" << config_header(rep.cfg, "#");
    out << "size,strategy,mean,sd\n";
    for (std::size_t si = 0; si < rep.cells.size(); ++si)
        for (std::size_t s = 0; s < rep.cfg.strategies.size(); ++s)
            out << rep.cfg.sizes[si] << "," << strategy_label(rep.cfg.strategies[s]) << ","
                << four(rep.cells[si][s].mean) << "," << four(rep.cells[si][s].sd) << "\n";
    return out.str();
}

ImportanceSeedResult run_importance_seed(const ImportanceConfig& cfg, int replicate) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(replicate)});
    GroundTruthTree truth = sample_truth(derive_seed(rep_seed, "truth"));
    Dataset train = sample_dataset(truth, cfg.n, cfg.noise, derive_seed(rep_seed, "train"));
    const std::uint64_t forest_seed = derive_seed(rep_seed, "forest");
    auto forest_for = [&](StrategyTag tag, const Dataset& data, int which) {
        Strategy strat;
        strat.tag = tag;
        AvailabilityPolicy user = trivial_policy(data.schema());
        FittedTransform ft = fit_transform(strat, data, user);
        ForestConfig fc;
        fc.n_trees = cfg.n_trees;
        fc.mtry = cfg.mtry;
        fc.beta = cfg.beta;
        fc.measure = cfg.measure;
        fc.seed = derive_seed(forest_seed, {static_cast<std::uint64_t>(which)});
        fc.strategy = strat;
        fc.threads = 1;
        Forest f = fit_forest(ft.train, ft.policy, fc);
        return gini_importance(f, ft.train.schema());
    };

    ImportanceSeedResult out;
    out.complete = forest_for(StrategyTag::none, train, 0);

    CensorSpec spec;
    spec.kind = CensorKind::mar_response;
    spec.seed = derive_seed(rep_seed, "censor");
    spec.target = cfg.target;
    spec.label = cfg.label;
    if (spec.target < 0) {
        // Censor the predictor the complete forest cared least about, so any
        // importance it gains afterwards comes from the missing pattern
        // rather than from its values.
        std::size_t lo = 0;
        for (std::size_t j = 1; j < out.complete.total.size(); ++j)
            if (out.complete.total[j] < out.complete.total[lo]) lo = j;
        spec.target = static_cast<int>(lo);
    }
    CensorSpec resolved = resolve_censor(spec, train);
    Dataset train_c = censor(train, resolved);
    out.target = resolved.target;

    out.sc = forest_for(StrategyTag::sc, train_c, 1);
    out.best = forest_for(StrategyTag::best, train_c, 2);
    return out;
}

ImportanceSummary run_importance(const ImportanceConfig& cfg) {
    if (cfg.replicates < 1) throw Error(ErrorKind::schema, "replicates must be positive");
    if (cfg.n < 1) throw Error(ErrorKind::schema, "training size must be positive");
    ImportanceSummary sum;
    sum.cfg = cfg;
    sum.seeds.resize(static_cast<std::size_t>(cfg.replicates));
    parallel_for(static_cast<std::size_t>(cfg.replicates), static_cast<unsigned>(cfg.threads),
                 [&](std::size_t r) { sum.seeds[r] = run_importance_seed(cfg, static_cast<int>(r)); });
    return sum;
}

namespace {

std::vector<std::string> importance_columns(const ImportanceSummary& sum) {
    std::vector<std::string> cols;
    auto absorb = [&](const ImportanceReport& rep) {
        for (const auto& n : rep.names)
            if (std::find(cols.begin(), cols.end(), n) == cols.end()) cols.push_back(n);
    };
    for (const auto& s : sum.seeds) {
        absorb(s.complete);
        absorb(s.sc);
        absorb(s.best);
    }
    return cols;
}

std::vector<double> mean_importance(const ImportanceSummary& sum,
                                    const ImportanceReport ImportanceSeedResult::*member,
                                    const std::vector<std::string>& cols, std::vector<bool>& present) {
    std::vector<double> mean(cols.size(), 0.0);
    present.assign(cols.size(), false);
    for (const auto& s : sum.seeds) {
        const ImportanceReport& rep = s.*member;
        for (std::size_t j = 0; j < rep.names.size(); ++j) {
            auto it = std::find(cols.begin(), cols.end(), rep.names[j]);
            std::size_t c = static_cast<std::size_t>(it - cols.begin());
            mean[c] += rep.total[j];
            present[c] = true;
        }
    }
    for (double& v : mean) v /= static_cast<double>(sum.seeds.size());
    return mean;
}

std::string importance_header(const ImportanceConfig& cfg, const char* comment) {
    std::ostringstream out;
    out << comment << " censor=mar_response target="
        << (cfg.target < 0 ? std::string("auto") : predictor_or_random(cfg.target))
        << " label=" << (cfg.label < 0 ? std::string("random") : std::to_string(cfg.label)) << "\n";
    out << comment << " n=" << cfg.n << " n_trees=" << cfg.n_trees
        << " replicates=" << cfg.replicates << " mtry=" << cfg.mtry << "\n";
    out << comment << " noise=" << format_double(cfg.noise) << " beta=" << format_double(cfg.beta)
        << " measure=" << measure_name(cfg.measure) << " seed=" << cfg.seed
        << " threads=" << cfg.threads << "\n";
    return out.str();
}

}  // namespace

std::string render_importance(const ImportanceSummary& sum) {
    std::vector<std::string> cols = importance_columns(sum);
    std::ostringstream out;
    out << "# forest importance report (mean summed impurity decrease)\n"
        << importance_header(sum.cfg, "#") << "\n";
    std::size_t w = 8;
    for (const auto& c : cols) w = std::max(w, c.size());
    std::string head = "strategy  ";
    for (const auto& c : cols) {
        std::string cell = c;
        cell.insert(0, w > cell.size() ? w - cell.size() : 0, ' ');
        head += "  " + cell;
    }
    out << head << "\n";
    struct Row {
        const char* name;
        const ImportanceReport ImportanceSeedResult::*member;
    };
    const Row rows[] = {{"COMPLETE", &ImportanceSeedResult::complete},
                        {"SC", &ImportanceSeedResult::sc},
                        {"BEST", &ImportanceSeedResult::best}};
    for (const Row& row : rows) {
        std::vector<bool> present;
        std::vector<double> mean = mean_importance(sum, row.member, cols, present);
        std::string line = row.name;
        line.append(10 - line.size(), ' ');
        for (std::size_t c = 0; c < cols.size(); ++c) {
            std::string cell = present[c] ? four(mean[c]) : std::string("-");
            cell.insert(0, w > cell.size() ? w - cell.size() : 0, ' ');
            line += "  " + cell;
        }
        out << line << "\n";
    }
    return out.str();
}

std::string render_importance_sidecar(const ImportanceSummary& sum) {
    std::vector<std::string> cols = importance_columns(sum);
    std::ostringstream out;
    out << "# forest importance report\n" << importance_header(sum.cfg, "#");
    out << "strategy,predictor,mean_importance\n";
    struct Row {
        const char* name;
        const ImportanceReport ImportanceSeedResult::*member;
    };
    const Row rows[] = {{"COMPLETE", &ImportanceSeedResult::complete},
                        {"SC", &ImportanceSeedResult::sc},
                        {"BEST", &ImportanceSeedResult::best}};
    for (const Row& row : rows) {
        std::vector<bool> present;
        std::vector<double> mean = mean_importance(sum, row.member, cols, present);
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (present[c])
                out << row.name << "," << cols[c] << "," << four(mean[c]) << "\n";
    }
    return out.str();
}

}  // namespace best
