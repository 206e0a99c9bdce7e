#include "best/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace best {

int Tree::n_leaves() const {
    int c = 0;
    for (const auto& n : nodes)
        if (n.is_leaf) ++c;
    return c;
}

int Tree::height() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

StopReason check_stopping(const Region& region, double beta, const Dataset& ds) {
    assert(!region.rows.empty());
    if (region.total_weight() <= beta) return StopReason::c1;

    const int first = ds.response(region.rows.front());
    bool mixed = false;
    for (int i : region.rows)
        if (ds.response(i) != first) {
            mixed = true;
            break;
        }
    if (!mixed) return StopReason::c2;

    for (int j = 0; j < ds.m(); ++j) {
        if (!region.available[static_cast<std::size_t>(j)]) continue;
        const bool numeric =
            ds.schema().predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric;
        bool seen = false;
        double v0 = 0.0;
        int c0 = 0;
        for (int i : region.rows) {
            if (!ds.observed(j, i)) continue;
            if (!seen) {
                seen = true;
                if (numeric)
                    v0 = ds.num(j, i);
                else
                    c0 = ds.cat(j, i);
                continue;
            }
            if (numeric ? ds.num(j, i) != v0 : ds.cat(j, i) != c0) return StopReason::grow;
        }
    }
    return StopReason::c3;
}

namespace {

constexpr double kZeroGainEps = 1e-12;

ClassHistogram region_histogram(const Dataset& ds, const Region& region) {
    ClassHistogram h(ds.k());
    for (std::size_t r = 0; r < region.rows.size(); ++r)
        h.add(ds.response(region.rows[r]), region.weights[r]);
    return h;
}

struct Fitter {
    const Dataset& ds;
    const FitConfig& cfg;
    const AvailabilityPolicy& policy;
    Diagnostics* diag;
    Tree tree;
    double dropped = 0.0;

    int fit_node(Region region, int depth) {
        const int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        TreeNode node;
        node.depth = depth;
        node.available = region.available;
        node.distribution = region_histogram(ds, region);
        node.count = node.distribution.total;
        node.node_impurity = impurity(node.distribution, cfg.measure);
        node.label = node.distribution.argmax();

        if (depth < cfg.max_depth && check_stopping(region, cfg.beta, ds) == StopReason::grow) {
            auto ev = search(region);
            if (ev && ev->total_impurity < node.count * node.node_impurity - kZeroGainEps) {
                node.is_leaf = false;
                node.split = ev->split;
                auto [left, right] = partition(region, node);
                node.fallback_right = right.total_weight() > left.total_weight();
                auto masks = apply_unlock(policy, region.available, node.split, ds.schema());
                left.available = std::move(masks.first);
                right.available = std::move(masks.second);
                node.left = fit_node(std::move(left), depth + 1);
                node.right = fit_node(std::move(right), depth + 1);
            }
        }
        tree.nodes[static_cast<std::size_t>(idx)] = std::move(node);
        return idx;
    }

    std::optional<SplitEvaluation> search(const Region& region) {
        if (cfg.mtry <= 0 || !cfg.mtry_rng) return best_split(ds, region, cfg.measure, 1.0);
        std::vector<int> avail;
        for (int j = 0; j < ds.m(); ++j)
            if (region.available[static_cast<std::size_t>(j)]) avail.push_back(j);
        if (static_cast<int>(avail.size()) <= cfg.mtry)
            return best_split(ds, region, cfg.measure, 1.0);
        Region sub = region;
        sub.available.assign(static_cast<std::size_t>(ds.m()), 0);
        for (int pick : cfg.mtry_rng->sample_without_replacement(static_cast<int>(avail.size()), cfg.mtry))
            sub.available[static_cast<std::size_t>(avail[static_cast<std::size_t>(pick)])] = 1;
        return best_split(ds, sub, cfg.measure, 1.0);
    }

    std::pair<Region, Region> partition(const Region& region, TreeNode& node) {
        const Split& split = node.split;
        if (cfg.strategy.tag == StrategyTag::dbi) return dbi_route_fit(ds, region, split);

        if (cfg.strategy.tag == StrategyTag::surrogate) {
            auto list = build_surrogates(ds, region, split, cfg.strategy.max_surrogates);
            node.surrogates = std::move(list.rules);
            Region left, right;
            for (std::size_t r = 0; r < region.rows.size(); ++r) {
                int i = region.rows[r];
                bool go_left;
                if (ds.observed(split.predictor, i)) {
                    go_left = split_goes_left(ds, split, i);
                } else {
                    go_left = !list.fallback_right;
                    for (const auto& s : node.surrogates) {
                        if (!ds.observed(s.split.predictor, i)) continue;
                        go_left = split_goes_left(ds, s.split, i) != s.mirrored;
                        break;
                    }
                }
                auto& side = go_left ? left : right;
                side.rows.push_back(i);
                side.weights.push_back(region.weights[r]);
            }
            return {std::move(left), std::move(right)};
        }

        Region left, right;
        for (std::size_t r = 0; r < region.rows.size(); ++r) {
            int i = region.rows[r];
            if (!ds.observed(split.predictor, i)) {
                dropped += region.weights[r];
                continue;
            }
            auto& side = split_goes_left(ds, split, i) ? left : right;
            side.rows.push_back(i);
            side.weights.push_back(region.weights[r]);
        }
        return {std::move(left), std::move(right)};
    }
};

}  // namespace

Tree fit(const Dataset& ds, const FitConfig& cfg, const AvailabilityPolicy& policy, Diagnostics* diag) {
    if (cfg.beta < 1.0) throw Error(ErrorKind::schema, "beta must be at least 1");
    if (ds.n() < 1) throw Error(ErrorKind::schema, "cannot fit on an empty dataset");
    if (!ds.has_response()) throw Error(ErrorKind::schema, "dataset has no response column");
    if (policy.schema_fp != ds.schema().fingerprint())
        throw Error(ErrorKind::fingerprint, "policy was compiled against a different schema");

    Fitter fitter{ds, cfg, policy, diag, {}, 0.0};
    fitter.tree.schema_fp = ds.schema().fingerprint();
    fitter.tree.policy_fp = policy.fingerprint();
    fitter.tree.beta = cfg.beta;
    fitter.tree.measure = cfg.measure;
    fitter.tree.strategy = cfg.strategy.tag;

    Region root;
    root.available = policy.root_mask;
    for (int i = 0; i < ds.n(); ++i) {
        double w = cfg.root_weights ? (*cfg.root_weights)[static_cast<std::size_t>(i)] : ds.weight(i);
        if (w <= 0.0) continue;
        root.rows.push_back(i);
        root.weights.push_back(w);
    }
    if (root.rows.empty()) throw Error(ErrorKind::schema, "no training observations carry weight");

    fitter.fit_node(std::move(root), 0);
    fitter.tree.dropped_weight = fitter.dropped;
    if (fitter.dropped > 0.0)
        warn_into(diag, "fit excluded " + format_double(fitter.dropped) +
                            " training weight at internal nodes (missing split values)");
    return fitter.tree;
}

namespace {

// single-path descent; -1 asks the caller to fork (dbi)
int descend(const Tree& t, const TreeNode& node, const Dataset& ds, int row) {
    const Split& split = node.split;
    if (ds.observed(split.predictor, row))
        return split_goes_left(ds, split, row) ? node.left : node.right;
    if (t.strategy == StrategyTag::dbi) return -1;
    if (t.strategy == StrategyTag::surrogate) {
        for (const auto& s : node.surrogates) {
            if (!ds.observed(s.split.predictor, row)) continue;
            return split_goes_left(ds, s.split, row) != s.mirrored ? node.left : node.right;
        }
    }
    return node.fallback_right ? node.right : node.left;
}

}  // namespace

std::vector<double> predict_distribution(const Tree& t, const Dataset& ds, int row) {
    const int k = t.root().distribution.k();
    std::vector<double> acc(static_cast<std::size_t>(k), 0.0);
    std::vector<std::pair<int, double>> stack{{0, 1.0}};
    while (!stack.empty()) {
        auto [idx, mass] = stack.back();
        stack.pop_back();
        const TreeNode& node = t.nodes[static_cast<std::size_t>(idx)];
        if (node.is_leaf) {
            for (int q = 0; q < k; ++q)
                acc[static_cast<std::size_t>(q)] +=
                    mass * node.distribution.counts[static_cast<std::size_t>(q)] /
                    node.distribution.total;
            continue;
        }
        int next = descend(t, node, ds, row);
        if (next >= 0) {
            stack.push_back({next, mass});
            continue;
        }
        const double cl = t.nodes[static_cast<std::size_t>(node.left)].count;
        const double cr = t.nodes[static_cast<std::size_t>(node.right)].count;
        const double tot = cl + cr;
        stack.push_back({node.right, mass * (tot > 0.0 ? cr / tot : 0.5)});
        stack.push_back({node.left, mass * (tot > 0.0 ? cl / tot : 0.5)});
    }
    return acc;
}

int predict_class(const Tree& t, const Dataset& ds, int row) {
    if (t.strategy != StrategyTag::dbi) {
        int idx = 0;
        while (!t.nodes[static_cast<std::size_t>(idx)].is_leaf)
            idx = descend(t, t.nodes[static_cast<std::size_t>(idx)], ds, row);
        return t.nodes[static_cast<std::size_t>(idx)].label;
    }
    auto dist = predict_distribution(t, ds, row);
    int best = 0;
    for (int q = 1; q < static_cast<int>(dist.size()); ++q)
        if (dist[static_cast<std::size_t>(q)] > dist[static_cast<std::size_t>(best)]) best = q;
    return best;
}

double empirical_loss(const Tree& t, const Dataset& ds) {
    assert(ds.has_response());
    double wrong = 0.0, total = 0.0;
    for (int i = 0; i < ds.n(); ++i) {
        total += ds.weight(i);
        if (predict_class(t, ds, i) != ds.response(i)) wrong += ds.weight(i);
    }
    return total > 0.0 ? wrong / total : 0.0;
}

namespace {

// subtree cost and leaf count under a collapse overlay
struct Collapser {
    const Tree& t;
    std::vector<std::uint8_t> collapsed;

    explicit Collapser(const Tree& tree)
        : t(tree), collapsed(tree.nodes.size(), 0) {}

    bool leaf_like(int i) const {
        return t.nodes[static_cast<std::size_t>(i)].is_leaf || collapsed[static_cast<std::size_t>(i)];
    }

    double node_cost(int i) const {
        const auto& n = t.nodes[static_cast<std::size_t>(i)];
        return n.count * n.node_impurity;
    }

    // nodes not buried under a collapsed ancestor; parents precede children
    // in the preorder layout, so one ascending pass settles it
    std::vector<std::uint8_t> visible() const {
        std::vector<std::uint8_t> vis(t.nodes.size(), 0);
        vis[0] = 1;
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            if (!vis[i] || leaf_like(static_cast<int>(i))) continue;
            vis[static_cast<std::size_t>(t.nodes[i].left)] = 1;
            vis[static_cast<std::size_t>(t.nodes[i].right)] = 1;
        }
        return vis;
    }

    // leaf costs and counts per subtree; descending index order visits
    // children before parents
    void tally(std::vector<double>& cost, std::vector<int>& leaves) const {
        cost.assign(t.nodes.size(), 0.0);
        leaves.assign(t.nodes.size(), 0);
        for (int i = static_cast<int>(t.nodes.size()) - 1; i >= 0; --i) {
            if (leaf_like(i)) {
                cost[static_cast<std::size_t>(i)] = node_cost(i);
                leaves[static_cast<std::size_t>(i)] = 1;
            } else {
                const auto& n = t.nodes[static_cast<std::size_t>(i)];
                cost[static_cast<std::size_t>(i)] = cost[static_cast<std::size_t>(n.left)] +
                                                    cost[static_cast<std::size_t>(n.right)];
                leaves[static_cast<std::size_t>(i)] = leaves[static_cast<std::size_t>(n.left)] +
                                                      leaves[static_cast<std::size_t>(n.right)];
            }
        }
    }

    double min_strength() const {
        std::vector<double> cost;
        std::vector<int> leaves;
        tally(cost, leaves);
        auto vis = visible();
        double mn = std::numeric_limits<double>::infinity();
        for (int i = 0; i < static_cast<int>(t.nodes.size()); ++i) {
            if (!vis[static_cast<std::size_t>(i)] || leaf_like(i)) continue;
            double g = (node_cost(i) - cost[static_cast<std::size_t>(i)]) /
                       static_cast<double>(leaves[static_cast<std::size_t>(i)] - 1);
            mn = std::min(mn, g);
        }
        return mn;
    }

    // collapse every visible node whose strength falls at or below the
    // threshold; children fold first so ancestors see updated subtrees
    void collapse_up_to(double threshold) {
        std::vector<double> cost(t.nodes.size(), 0.0);
        std::vector<int> leaves(t.nodes.size(), 0);
        auto vis = visible();
        for (int i = static_cast<int>(t.nodes.size()) - 1; i >= 0; --i) {
            if (leaf_like(i)) {
                cost[static_cast<std::size_t>(i)] = node_cost(i);
                leaves[static_cast<std::size_t>(i)] = 1;
                continue;
            }
            const auto& n = t.nodes[static_cast<std::size_t>(i)];
            cost[static_cast<std::size_t>(i)] =
                cost[static_cast<std::size_t>(n.left)] + cost[static_cast<std::size_t>(n.right)];
            leaves[static_cast<std::size_t>(i)] = leaves[static_cast<std::size_t>(n.left)] +
                                                  leaves[static_cast<std::size_t>(n.right)];
            double g = (node_cost(i) - cost[static_cast<std::size_t>(i)]) /
                       static_cast<double>(leaves[static_cast<std::size_t>(i)] - 1);
            if (vis[static_cast<std::size_t>(i)] && g <= threshold) {
                collapsed[static_cast<std::size_t>(i)] = 1;
                cost[static_cast<std::size_t>(i)] = node_cost(i);
                leaves[static_cast<std::size_t>(i)] = 1;
            }
        }
    }

    Tree materialize() const {
        Tree out;
        out.schema_fp = t.schema_fp;
        out.policy_fp = t.policy_fp;
        out.beta = t.beta;
        out.measure = t.measure;
        out.strategy = t.strategy;
        out.dropped_weight = t.dropped_weight;
        copy_node(0, out);
        return out;
    }

  private:
    int copy_node(int i, Tree& out) const {
        const int idx = static_cast<int>(out.nodes.size());
        out.nodes.push_back(t.nodes[static_cast<std::size_t>(i)]);
        if (leaf_like(i)) {
            auto& n = out.nodes.back();
            n.is_leaf = true;
            n.left = n.right = -1;
            n.split = Split{};
            n.surrogates.clear();
            n.label = n.distribution.argmax();
        } else {
            int l = copy_node(t.nodes[static_cast<std::size_t>(i)].left, out);
            int r = copy_node(t.nodes[static_cast<std::size_t>(i)].right, out);
            out.nodes[static_cast<std::size_t>(idx)].left = l;
            out.nodes[static_cast<std::size_t>(idx)].right = r;
        }
        return idx;
    }
};

}  // namespace

PruneSequence prune_sequence(const Tree& t) {
    PruneSequence seq;
    Collapser overlay(t);

    // zero-gain subtrees fold into the first element
    overlay.collapse_up_to(kZeroGainEps);
    seq.alphas.push_back(0.0);
    seq.subtrees.push_back(overlay.materialize());

    while (!overlay.leaf_like(0)) {
        double alpha = overlay.min_strength();
        overlay.collapse_up_to(alpha * (1.0 + 1e-12) + 1e-15);
        if (alpha <= seq.alphas.back() + 1e-15) {
            seq.subtrees.back() = overlay.materialize();
        } else {
            seq.alphas.push_back(alpha);
            seq.subtrees.push_back(overlay.materialize());
        }
    }
    return seq;
}

const Tree& select_by_validation(const PruneSequence& seq, const Dataset& val) {
    assert(!seq.subtrees.empty());
    if (val.n() < 1) throw Error(ErrorKind::schema, "empty validation set");
    std::size_t pick = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < seq.subtrees.size(); ++i) {
        double loss = empirical_loss(seq.subtrees[i], val);
        if (loss <= best) {
            best = loss;
            pick = i;
        }
    }
    return seq.subtrees[pick];
}

namespace {

int audit_node(const Tree& t, const AvailabilityPolicy& policy, const Schema& schema, int idx,
               const std::vector<std::uint8_t>& mask) {
    const TreeNode& node = t.nodes[static_cast<std::size_t>(idx)];
    if (node.is_leaf) return 0;
    int bad = mask[static_cast<std::size_t>(node.split.predictor)] ? 0 : 1;
    auto masks = apply_unlock(policy, mask, node.split, schema);
    return bad + audit_node(t, policy, schema, node.left, masks.first) +
           audit_node(t, policy, schema, node.right, masks.second);
}

}  // namespace

int audit_gating(const Tree& t, const AvailabilityPolicy& policy, const Schema& schema) {
    if (t.nodes.empty()) return 0;
    return audit_node(t, policy, schema, 0, policy.root_mask);
}

double weight_at_depth(const Tree& t, int depth) {
    double s = 0.0;
    for (const auto& n : t.nodes) {
        if (n.depth == depth)
            s += n.count;
        else if (n.is_leaf && n.depth < depth)
            s += n.count;
    }
    return s;
}

}  // namespace best
