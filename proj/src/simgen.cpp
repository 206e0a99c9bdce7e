#include "best/simgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "best/rng.hpp"

namespace best {

namespace {

constexpr int kDepth = 4;
constexpr int kNumeric = 4;
constexpr int kCats = 4;
constexpr int kLevels = 4;
constexpr int kLabels = 4;
constexpr double kQ90 = 1.2815515655446004;  // standard normal 90% quantile

// Per-path sampling state: the numeric interval still reachable and the
// category codes still reachable, per predictor.
struct PathState {
    std::array<double, kNumeric> lo;
    std::array<double, kNumeric> hi;
    std::array<std::vector<int>, kCats> rem;
    bool target_ok = true;

    static PathState initial() {
        PathState st;
        st.lo.fill(-kQ90);
        st.hi.fill(kQ90);
        for (auto& r : st.rem) r = {0, 1, 2, 3};
        return st;
    }
};

// Label pools for leaf assignment. Paired pools make the gated benchmark's
// signal depend on the target predictor.
enum LabelPool : int { any4 = 0, low2 = 1, high2 = 2 };

struct TruthSampler {
    Rng rng;
    int target;  // numeric predictor barred where target_ok is false, -1 for none
    std::vector<TruthNode> nodes;
    std::vector<int> leaves;
    std::vector<int> pools;

    TruthSampler(std::uint64_t seed, int target_idx) : rng(seed), target(target_idx) {}

    double central_draw(double lo, double hi) {
        double span = hi - lo;
        return lo + (0.1 + 0.8 * rng.uniform()) * span;
    }

    int grow(const PathState& st, int depth, int pool) {
        int idx = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (depth == kDepth) {
            nodes[idx].is_leaf = true;
            leaves.push_back(idx);
            pools.push_back(pool);
            return idx;
        }
        std::vector<int> elig;
        for (int j = 0; j < kNumeric; ++j)
            if (j != target || st.target_ok) elig.push_back(j);
        for (int j = 0; j < kCats; ++j)
            if (st.rem[j].size() >= 2) elig.push_back(kNumeric + j);
        int pick = elig[static_cast<std::size_t>(rng.below(elig.size()))];

        Split split;
        split.predictor = pick;
        PathState stl = st;
        PathState str = st;
        if (pick < kNumeric) {
            split.numeric = true;
            split.threshold = central_draw(st.lo[pick], st.hi[pick]);
            stl.hi[pick] = split.threshold;
            str.lo[pick] = split.threshold;
        } else {
            int c = pick - kNumeric;
            const auto& rem = st.rem[c];
            split.numeric = false;
            std::uint64_t mask =
                1 + rng.below((std::uint64_t(1) << rem.size()) - 2);
            stl.rem[c].clear();
            str.rem[c].clear();
            for (std::size_t b = 0; b < rem.size(); ++b) {
                if (mask >> b & 1) {
                    split.left_categories.push_back(rem[b]);
                    stl.rem[c].push_back(rem[b]);
                } else {
                    str.rem[c].push_back(rem[b]);
                }
            }
        }
        int l = grow(stl, depth + 1, pool);
        int r = grow(str, depth + 1, pool);
        nodes[idx].split = split;
        nodes[idx].left = l;
        nodes[idx].right = r;
        return idx;
    }

    // Each node carries a label anchor; one child keeps it and the other
    // moves a step, in random order. The root moves two steps so its halves
    // land on opposite label pairs. Leaf labels are the accumulated drift,
    // so sibling subtrees differ at every depth, adjacent leaves stay close,
    // and sibling leaves always disagree. Redraw until all four appear.
    void assign_labels() {
        for (;;) {
            std::array<bool, kLabels> seen{};
            drift_labels(0, 0, 2, seen);
            if (seen[0] && seen[1] && seen[2] && seen[3]) return;
        }
    }

    void drift_labels(int idx, int anchor, int step, std::array<bool, kLabels>& seen) {
        TruthNode& nd = nodes[idx];
        if (nd.is_leaf) {
            nd.label = anchor;
            seen[anchor] = true;
            return;
        }
        int moved = (anchor + step) % kLabels;
        int flip = static_cast<int>(rng.below(2));
        drift_labels(nd.left, flip ? moved : anchor, 1, seen);
        drift_labels(nd.right, flip ? anchor : moved, 1, seen);
    }

    // Gated variant: each pair takes its pool's two labels in random order.
    void assign_paired_labels() {
        for (std::size_t i = 0; i < leaves.size(); i += 2) {
            int base = pools[i] == low2 ? 0 : 2;
            int flip = static_cast<int>(rng.below(2));
            nodes[leaves[i]].label = base + flip;
            nodes[leaves[i + 1]].label = base + (1 - flip);
        }
    }
};

}  // namespace

Schema simgen_schema() {
    Schema s;
    for (int j = 1; j <= kNumeric; ++j)
        s.predictors.push_back({"x" + std::to_string(j), PredictorKind::numeric, {}});
    for (int j = kNumeric + 1; j <= kNumeric + kCats; ++j)
        s.predictors.push_back(
            {"x" + std::to_string(j), PredictorKind::categorical, {"a", "b", "c", "d"}});
    s.response_labels = {"0", "1", "2", "3"};
    return s;
}

GroundTruthTree sample_truth(std::uint64_t seed) {
    TruthSampler s(seed, -1);
    s.grow(PathState::initial(), 0, any4);
    s.assign_labels();
    GroundTruthTree t;
    t.nodes = std::move(s.nodes);
    return t;
}

GroundTruthTree sample_truth_gated(std::uint64_t seed, int gate, int target) {
    if (gate < kNumeric || gate >= kNumeric + kCats)
        throw Error(ErrorKind::schema, "gated truth needs a categorical gate");
    if (target < 0 || target >= kNumeric)
        throw Error(ErrorKind::schema, "gated truth needs a numeric target");
    TruthSampler s(seed, target);
    int g = gate - kNumeric;
    PathState st = PathState::initial();

    s.nodes.emplace_back();  // root: gate into lower half vs upper half
    Split root_split;
    root_split.predictor = gate;
    root_split.numeric = false;
    root_split.left_categories = {0, 1};

    // Masked half: the gate refines once more, then free structure over the
    // high label pair. Sharing that pair with the observed high side leaves
    // pooled marginals flat, so only the gate partition exposes it.
    PathState stl = st;
    stl.rem[g] = {0, 1};
    stl.target_ok = false;
    int l = static_cast<int>(s.nodes.size());
    s.nodes.emplace_back();
    Split lsplit;
    lsplit.predictor = gate;
    lsplit.numeric = false;
    lsplit.left_categories = {0};
    PathState sta = stl;
    sta.rem[g] = {0};
    PathState stb = stl;
    stb.rem[g] = {1};
    int la = s.grow(sta, 2, high2);
    int lb = s.grow(stb, 2, high2);
    s.nodes[l].split = lsplit;
    s.nodes[l].left = la;
    s.nodes[l].right = lb;

    // Observed half: the target splits off centre so the low pair holds the
    // majority, keeping the root gate partition the strongest single split.
    PathState str = st;
    str.rem[g] = {2, 3};
    int r = static_cast<int>(s.nodes.size());
    s.nodes.emplace_back();
    Split tsplit;
    tsplit.predictor = target;
    tsplit.numeric = true;
    double span = str.hi[target] - str.lo[target];
    tsplit.threshold = str.lo[target] + (0.5 + 0.3 * s.rng.uniform()) * span;
    PathState strl = str;
    strl.hi[target] = tsplit.threshold;
    PathState strr = str;
    strr.lo[target] = tsplit.threshold;

    int rl = static_cast<int>(s.nodes.size());
    s.nodes.emplace_back();  // gate refines below the target on both sides
    Split gsplit;
    gsplit.predictor = gate;
    gsplit.numeric = false;
    gsplit.left_categories = {2};
    PathState strlc = strl;
    strlc.rem[g] = {2};
    PathState strld = strl;
    strld.rem[g] = {3};
    int rlc = s.grow(strlc, 3, low2);
    int rld = s.grow(strld, 3, low2);
    s.nodes[rl].split = gsplit;
    s.nodes[rl].left = rlc;
    s.nodes[rl].right = rld;

    int rr = static_cast<int>(s.nodes.size());
    s.nodes.emplace_back();
    PathState strrc = strr;
    strrc.rem[g] = {2};
    PathState strrd = strr;
    strrd.rem[g] = {3};
    int rrc = s.grow(strrc, 3, high2);
    int rrd = s.grow(strrd, 3, high2);
    s.nodes[rr].split = gsplit;
    s.nodes[rr].left = rrc;
    s.nodes[rr].right = rrd;

    s.nodes[r].split = tsplit;
    s.nodes[r].left = rl;
    s.nodes[r].right = rr;

    s.nodes[0].split = root_split;
    s.nodes[0].left = l;
    s.nodes[0].right = r;
    s.assign_paired_labels();

    GroundTruthTree t;
    t.nodes = std::move(s.nodes);
    t.gate = gate;
    t.target = target;
    return t;
}

int dominant_predictor(const GroundTruthTree& truth, PredictorKind kind) {
    std::array<double, kNumeric + kCats> use{};
    struct Frame {
        int node;
        int depth;
    };
    std::vector<Frame> stack{{0, 0}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        const TruthNode& nd = truth.nodes[f.node];
        if (nd.is_leaf) continue;
        use[nd.split.predictor] += std::ldexp(1.0, -f.depth);
        stack.push_back({nd.left, f.depth + 1});
        stack.push_back({nd.right, f.depth + 1});
    }
    int from = kind == PredictorKind::numeric ? 0 : kNumeric;
    int to = kind == PredictorKind::numeric ? kNumeric : kNumeric + kCats;
    int pick = -1;
    for (int j = from; j < to; ++j)
        if (use[j] > 0.0 && (pick < 0 || use[j] > use[pick])) pick = j;
    return pick;
}

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

CensorAnchor pick_censor_anchor(const GroundTruthTree& truth) {
    struct Frame {
        int node;
        int depth;
        double mass;
        std::array<double, kNumeric> lo, hi;
        std::array<std::vector<int>, kCats> rem;
    };
    Frame root;
    root.node = 0;
    root.depth = 0;
    root.mass = 1.0;
    root.lo.fill(-std::numeric_limits<double>::infinity());
    root.hi.fill(std::numeric_limits<double>::infinity());
    for (auto& r : root.rem) r = {0, 1, 2, 3};

    CensorAnchor pick;
    double best = 0.0;
    std::vector<Frame> stack{std::move(root)};
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const TruthNode& nd = truth.nodes[f.node];
        if (nd.is_leaf) continue;
        const Split& sp = nd.split;
        double mass = f.mass;
        int depth = f.depth;
        Frame l = f;
        Frame r = std::move(f);
        l.node = nd.left;
        r.node = nd.right;
        l.depth = depth + 1;
        r.depth = depth + 1;
        if (sp.numeric) {
            double span = norm_cdf(r.hi[sp.predictor]) - norm_cdf(r.lo[sp.predictor]);
            double p = span > 0.0
                           ? (norm_cdf(sp.threshold) - norm_cdf(r.lo[sp.predictor])) / span
                           : 0.5;
            l.mass = mass * p;
            r.mass = mass * (1.0 - p);
            l.hi[sp.predictor] = sp.threshold;
            r.lo[sp.predictor] = sp.threshold;
        } else {
            int c = sp.predictor - kNumeric;
            const std::vector<int>& rem = r.rem[c];
            std::size_t total = rem.size();
            std::size_t left = sp.left_categories.size();
            bool exact = left == 1 || total - left == 1;
            // Per-region value of recovering this cut: the two top levels
            // shift the label majority, the bottom one separates two pure
            // leaves, and depth two mostly sharpens mixtures. Censoring a
            // whole side keeps the indicator exact even for wide splits but
            // leaves the other side's levels observed, hence the discount.
            static constexpr double kCutGain[] = {0.125, 0.125, 0.02, 0.4};
            double score = mass * kCutGain[std::min(depth, 3)] * (exact ? 1.0 : 0.75);
            if (score > best) {
                best = score;
                pick.predictor = sp.predictor;
                pick.censored.clear();
                if (exact) {
                    int keep = sp.left_categories.front();
                    if (left != 1) {
                        for (int v : rem)
                            if (!std::binary_search(sp.left_categories.begin(),
                                                    sp.left_categories.end(), v))
                                keep = v;
                    }
                    for (int v = 0; v < kLevels; ++v)
                        if (v != keep) pick.censored.push_back(v);
                } else {
                    pick.censored = sp.left_categories;
                }
            }
            l.mass = mass * (static_cast<double>(left) / static_cast<double>(total));
            r.mass = mass - l.mass;
            std::vector<int> rest;
            for (int v : rem)
                if (!std::binary_search(sp.left_categories.begin(), sp.left_categories.end(), v))
                    rest.push_back(v);
            l.rem[c] = sp.left_categories;
            r.rem[c] = std::move(rest);
        }
        stack.push_back(std::move(l));
        stack.push_back(std::move(r));
    }
    return pick;
}

int truth_label(const GroundTruthTree& truth, const double* nums, const int* cats) {
    int i = 0;
    while (!truth.nodes[i].is_leaf) {
        const TruthNode& nd = truth.nodes[i];
        bool left;
        if (nd.split.numeric) {
            left = nums[nd.split.predictor] <= nd.split.threshold;
        } else {
            int code = cats[nd.split.predictor - kNumeric];
            left = std::binary_search(nd.split.left_categories.begin(),
                                      nd.split.left_categories.end(), code);
        }
        i = left ? nd.left : nd.right;
    }
    return truth.nodes[i].label;
}

Dataset sample_dataset(const GroundTruthTree& truth, int n, double noise, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorKind::schema, "sample size must be positive");
    Rng rng(seed);
    std::vector<Dataset::Column> cols(kNumeric + kCats);
    for (int j = 0; j < kNumeric; ++j) {
        cols[j].num.resize(n);
        cols[j].obs.assign(n, 1);
    }
    for (int j = kNumeric; j < kNumeric + kCats; ++j) {
        cols[j].cat.resize(n);
        cols[j].obs.assign(n, 1);
    }
    std::vector<int> response(n);
    double nums[kNumeric];
    int cats[kCats];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < kNumeric; ++j) {
            nums[j] = rng.normal();
            cols[j].num[i] = nums[j];
        }
        for (int j = 0; j < kCats; ++j) {
            cats[j] = static_cast<int>(rng.below(kLevels));
            cols[kNumeric + j].cat[i] = cats[j];
        }
        int label = truth_label(truth, nums, cats);
        if (noise > 0.0 && rng.uniform() < noise)
            label = (label + 1 + static_cast<int>(rng.below(kLabels - 1))) % kLabels;
        response[i] = label;
    }
    return Dataset::from_columns(simgen_schema(), std::move(cols), std::move(response));
}

CensorKind parse_censor(std::string_view name) {
    if (name == "mar_gate") return CensorKind::mar_gate;
    if (name == "mar_response") return CensorKind::mar_response;
    if (name == "mnar_numeric") return CensorKind::mnar_numeric;
    if (name == "mnar_categorical") return CensorKind::mnar_categorical;
    throw Error(ErrorKind::schema, "unknown censor kind '" + std::string(name) + "'");
}

std::string censor_name(CensorKind kind) {
    switch (kind) {
        case CensorKind::mar_gate: return "mar_gate";
        case CensorKind::mar_response: return "mar_response";
        case CensorKind::mnar_numeric: return "mnar_numeric";
        case CensorKind::mnar_categorical: return "mnar_categorical";
    }
    return "?";
}

namespace {

void check_censor_types(const CensorSpec& spec, const Schema& schema) {
    if (spec.target < 0 || spec.target >= schema.m())
        throw Error(ErrorKind::schema, "censor target out of range");
    const auto kind = schema.predictors[spec.target].kind;
    switch (spec.kind) {
        case CensorKind::mnar_numeric:
            if (kind != PredictorKind::numeric)
                throw Error(ErrorKind::schema, "mnar_numeric needs a numeric target");
            break;
        case CensorKind::mnar_categorical:
            if (kind != PredictorKind::categorical)
                throw Error(ErrorKind::schema, "mnar_categorical needs a categorical target");
            break;
        case CensorKind::mar_gate:
            if (spec.gate < 0 || spec.gate >= schema.m())
                throw Error(ErrorKind::schema, "mar_gate needs a gate predictor");
            if (spec.gate == spec.target)
                throw Error(ErrorKind::schema, "gate and target must differ");
            if (schema.predictors[spec.gate].kind != PredictorKind::categorical)
                throw Error(ErrorKind::schema, "mar_gate needs a categorical gate");
            break;
        case CensorKind::mar_response:
            break;
    }
}

}  // namespace

CensorSpec resolve_censor(const CensorSpec& spec, const Dataset& train) {
    CensorSpec out = spec;
    const Schema& schema = train.schema();
    Rng rng(spec.seed);

    if (out.target < 0) {
        std::vector<int> pool;
        for (int j = 0; j < schema.m(); ++j) {
            const auto kind = schema.predictors[j].kind;
            bool ok = true;
            if (out.kind == CensorKind::mnar_numeric) ok = kind == PredictorKind::numeric;
            if (out.kind == CensorKind::mnar_categorical) ok = kind == PredictorKind::categorical;
            if (out.kind == CensorKind::mar_gate) ok = j != out.gate;
            if (ok) pool.push_back(j);
        }
        if (pool.empty())
            throw Error(ErrorKind::schema, "no predictor is compatible with the censor kind");
        out.target = pool[static_cast<std::size_t>(rng.below(pool.size()))];
    }

    switch (out.kind) {
        case CensorKind::mar_gate: {
            if (out.gate < 0) {
                std::vector<int> pool;
                for (int j = 0; j < schema.m(); ++j)
                    if (j != out.target &&
                        schema.predictors[j].kind == PredictorKind::categorical)
                        pool.push_back(j);
                if (pool.empty())
                    throw Error(ErrorKind::schema, "mar_gate found no categorical gate");
                out.gate = pool[static_cast<std::size_t>(rng.below(pool.size()))];
            }
            break;
        }
        case CensorKind::mar_response: {
            if (!train.has_response())
                throw Error(ErrorKind::schema, "mar_response needs a response column");
            if (out.label < 0) out.label = static_cast<int>(rng.below(schema.k()));
            if (out.label >= schema.k())
                throw Error(ErrorKind::schema, "mar_response label out of range");
            break;
        }
        case CensorKind::mnar_numeric: {
            check_censor_types(out, schema);
            if (!out.has_threshold) {
                out.above = rng.below(2) == 1;
                double lo = 0.0, hi = 0.0;
                bool seen = false;
                for (int i = 0; i < train.n(); ++i) {
                    if (!train.observed(out.target, i)) continue;
                    double v = train.num(out.target, i);
                    if (!seen) {
                        lo = hi = v;
                        seen = true;
                    } else {
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                }
                if (!seen)
                    throw Error(ErrorKind::schema,
                                "mnar_numeric target has no observed values");
                out.threshold = rng.uniform(lo, hi);
                out.has_threshold = true;
            }
            break;
        }
        case CensorKind::mnar_categorical: {
            check_censor_types(out, schema);
            if (out.categories.empty()) {
                // One censored level, so the mask pins the hidden value exactly.
                int levels = static_cast<int>(schema.predictors[out.target].categories.size());
                out.categories.push_back(static_cast<int>(rng.below(levels)));
            }
            break;
        }
    }
    check_censor_types(out, schema);
    out.resolved = true;
    return out;
}

Dataset censor(const Dataset& ds, const CensorSpec& spec) {
    if (!spec.resolved)
        throw Error(ErrorKind::schema, "censor spec must be resolved against training data first");
    const Schema& schema = ds.schema();
    check_censor_types(spec, schema);
    std::vector<std::uint8_t> mask = ds.column(spec.target).obs;
    switch (spec.kind) {
        case CensorKind::mar_gate: {
            int half = static_cast<int>(schema.predictors[spec.gate].categories.size()) / 2;
            for (int i = 0; i < ds.n(); ++i)
                if (ds.observed(spec.gate, i) && ds.cat(spec.gate, i) < half) mask[i] = 0;
            break;
        }
        case CensorKind::mar_response: {
            if (!ds.has_response())
                throw Error(ErrorKind::schema, "mar_response needs a response column");
            for (int i = 0; i < ds.n(); ++i)
                if (ds.response(i) == spec.label) mask[i] = 0;
            break;
        }
        case CensorKind::mnar_numeric: {
            for (int i = 0; i < ds.n(); ++i) {
                if (!ds.observed(spec.target, i)) continue;
                double v = ds.num(spec.target, i);
                if (spec.above ? v > spec.threshold : v <= spec.threshold) mask[i] = 0;
            }
            break;
        }
        case CensorKind::mnar_categorical: {
            for (int i = 0; i < ds.n(); ++i) {
                if (!ds.observed(spec.target, i)) continue;
                if (std::binary_search(spec.categories.begin(), spec.categories.end(),
                                       ds.cat(spec.target, i)))
                    mask[i] = 0;
            }
            break;
        }
    }
    return ds.with_mask(spec.target, std::move(mask));
}

}  // namespace best
