#include "best/forest.hpp"

#include <algorithm>
#include <cmath>

#include "best/rng.hpp"

namespace best {

namespace {

int effective_mtry(const ForestConfig& cfg, const AvailabilityPolicy& policy) {
    int m_avail = 0;
    for (bool b : policy.root_mask)
        if (b) ++m_avail;
    if (m_avail == 0) m_avail = static_cast<int>(policy.root_mask.size());
    if (cfg.mtry > 0) return cfg.mtry;
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m_avail))));
}

}  // namespace

Forest fit_forest(const Dataset& ds, const AvailabilityPolicy& policy, const ForestConfig& cfg,
                  Diagnostics* diag) {
    if (cfg.n_trees < 1) throw Error(ErrorKind::schema, "forest needs at least one tree");
    if (ds.n() == 0) throw Error(ErrorKind::schema, "cannot fit a forest on an empty dataset");
    const int mtry = effective_mtry(cfg, policy);
    if (mtry < 1 || mtry > ds.m())
        throw Error(ErrorKind::schema, "mtry must lie between 1 and the number of predictors");

    Forest f;
    f.cfg = cfg;
    f.cfg.mtry = mtry;
    f.schema_fp = ds.schema().fingerprint();
    f.seeds.resize(cfg.n_trees);
    f.trees.resize(cfg.n_trees);
    const std::uint64_t base = derive_seed(cfg.seed, "tree");
    for (int t = 0; t < cfg.n_trees; ++t)
        f.seeds[t] = derive_seed(base, {static_cast<std::uint64_t>(t)});

    std::vector<Diagnostics> per_tree_diag(cfg.n_trees);
    parallel_for(cfg.n_trees, cfg.threads, [&](int t) {
        Rng rng(f.seeds[t]);
        std::vector<double> weights;
        if (cfg.bootstrap) {
            weights.assign(ds.n(), 0.0);
            for (int d = 0; d < ds.n(); ++d)
                weights[static_cast<int>(rng.below(ds.n()))] += ds.weight(d);
        }
        FitConfig fc;
        fc.beta = cfg.beta;
        fc.measure = cfg.measure;
        fc.max_depth = cfg.max_depth;
        fc.strategy = cfg.strategy;
        fc.mtry = mtry;
        fc.mtry_rng = &rng;
        fc.root_weights = cfg.bootstrap ? &weights : nullptr;
        f.trees[t] = fit(ds, fc, policy, &per_tree_diag[t]);
    });
    if (diag) {
        for (const auto& d : per_tree_diag)
            for (const auto& w : d.warnings) diag->warn(w);
    }
    return f;
}

int predict_forest(const Forest& f, const Dataset& ds, int row) {
    std::vector<int> votes(ds.k(), 0);
    for (const auto& t : f.trees) ++votes[predict_class(t, ds, row)];
    int best = 0;
    for (int c = 1; c < ds.k(); ++c)
        if (votes[c] > votes[best]) best = c;
    return best;
}

double forest_accuracy(const Forest& f, const Dataset& ds) {
    if (!ds.has_response() || ds.n() == 0)
        throw Error(ErrorKind::schema, "accuracy needs a response column");
    double hit = 0.0, total = 0.0;
    for (int i = 0; i < ds.n(); ++i) {
        total += ds.weight(i);
        if (predict_forest(f, ds, i) == ds.response(i)) hit += ds.weight(i);
    }
    return hit / total;
}

ImportanceReport gini_importance(const Forest& f, const Schema& schema) {
    ImportanceReport rep;
    rep.names.reserve(schema.m());
    for (const auto& p : schema.predictors) rep.names.push_back(p.name);
    rep.total.assign(schema.m(), 0.0);
    for (const auto& t : f.trees) {
        for (const auto& node : t.nodes) {
            if (node.is_leaf) continue;
            const auto& l = t.nodes[node.left];
            const auto& r = t.nodes[node.right];
            double dec = node.count * node.node_impurity - l.count * l.node_impurity -
                         r.count * r.node_impurity;
            rep.total[node.split.predictor] += dec;
        }
    }
    for (auto& v : rep.total)
        if (v < 0.0 && v > -1e-9) v = 0.0;
    rep.per_tree.resize(rep.total.size());
    for (std::size_t j = 0; j < rep.total.size(); ++j)
        rep.per_tree[j] = rep.total[j] / static_cast<double>(f.trees.size());
    return rep;
}

}  // namespace best
