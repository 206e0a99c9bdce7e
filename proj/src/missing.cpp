#include "best/missing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace best {

StrategyTag parse_strategy(std::string_view name) {
    if (name == "none") return StrategyTag::none;
    if (name == "dbi") return StrategyTag::dbi;
    if (name == "svi") return StrategyTag::svi;
    if (name == "pvi") return StrategyTag::pvi;
    if (name == "sc") return StrategyTag::sc;
    if (name == "surrogate") return StrategyTag::surrogate;
    if (name == "best") return StrategyTag::best;
    throw Error(ErrorKind::schema, "unknown strategy '" + std::string(name) + "'");
}

std::string strategy_name(StrategyTag tag) {
    switch (tag) {
        case StrategyTag::none: return "none";
        case StrategyTag::dbi: return "dbi";
        case StrategyTag::svi: return "svi";
        case StrategyTag::pvi: return "pvi";
        case StrategyTag::sc: return "sc";
        case StrategyTag::surrogate: return "surrogate";
        case StrategyTag::best: return "best";
    }
    return "none";
}

std::string strategy_label(StrategyTag tag) {
    switch (tag) {
        case StrategyTag::none: return "NONE";
        case StrategyTag::dbi: return "DBI";
        case StrategyTag::svi: return "SVI";
        case StrategyTag::pvi: return "PVI";
        case StrategyTag::sc: return "SC";
        case StrategyTag::surrogate: return "SURR";
        case StrategyTag::best: return "BEST";
    }
    return "NONE";
}

namespace {

struct FillValues {
    std::vector<double> num;  // observed means, numeric columns
    std::vector<int> cat;     // observed modes, categorical columns
};

FillValues observed_fill(const Dataset& ds, bool error_on_empty) {
    const int m = ds.m();
    FillValues f;
    f.num.assign(static_cast<std::size_t>(m), 0.0);
    f.cat.assign(static_cast<std::size_t>(m), 0);
    for (int j = 0; j < m; ++j) {
        const auto& pred = ds.schema().predictors[static_cast<std::size_t>(j)];
        if (pred.kind == PredictorKind::numeric) {
            double sw = 0.0, sv = 0.0;
            for (int i = 0; i < ds.n(); ++i) {
                if (!ds.observed(j, i)) continue;
                sw += ds.weight(i);
                sv += ds.weight(i) * ds.num(j, i);
            }
            if (sw <= 0.0) {
                if (error_on_empty)
                    throw Error(ErrorKind::schema, "column '" + pred.name + "' is fully missing");
                f.num[static_cast<std::size_t>(j)] = 0.0;
            } else {
                f.num[static_cast<std::size_t>(j)] = sv / sw;
            }
        } else {
            std::vector<double> w(pred.categories.size(), 0.0);
            bool any = false;
            for (int i = 0; i < ds.n(); ++i) {
                if (!ds.observed(j, i)) continue;
                w[static_cast<std::size_t>(ds.cat(j, i))] += ds.weight(i);
                any = true;
            }
            if (!any && error_on_empty)
                throw Error(ErrorKind::schema, "column '" + pred.name + "' is fully missing");
            int mode = 0;
            for (int c = 1; c < static_cast<int>(w.size()); ++c)
                if (w[static_cast<std::size_t>(c)] > w[static_cast<std::size_t>(mode)]) mode = c;
            f.cat[static_cast<std::size_t>(j)] = mode;
        }
    }
    return f;
}

std::vector<int> copy_response(const Dataset& ds) {
    std::vector<int> r;
    if (!ds.has_response()) return r;
    r.resize(static_cast<std::size_t>(ds.n()));
    for (int i = 0; i < ds.n(); ++i) r[static_cast<std::size_t>(i)] = ds.response(i);
    return r;
}

std::vector<double> copy_weights(const Dataset& ds) {
    std::vector<double> w(static_cast<std::size_t>(ds.n()));
    for (int i = 0; i < ds.n(); ++i) w[static_cast<std::size_t>(i)] = ds.weight(i);
    return w;
}

Dataset fill_with(const Dataset& ds, const FillValues& f) {
    std::vector<Dataset::Column> cols;
    cols.reserve(static_cast<std::size_t>(ds.m()));
    for (int j = 0; j < ds.m(); ++j) {
        Dataset::Column col = ds.column(j);
        const bool num = ds.schema().predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric;
        for (int i = 0; i < ds.n(); ++i) {
            if (col.obs[static_cast<std::size_t>(i)]) continue;
            if (num)
                col.num[static_cast<std::size_t>(i)] = f.num[static_cast<std::size_t>(j)];
            else
                col.cat[static_cast<std::size_t>(i)] = f.cat[static_cast<std::size_t>(j)];
            col.obs[static_cast<std::size_t>(i)] = 1;
        }
        cols.push_back(std::move(col));
    }
    return Dataset::from_columns(ds.schema(), std::move(cols), copy_response(ds), copy_weights(ds));
}

bool any_missing(const Dataset& ds) {
    for (int j = 0; j < ds.m(); ++j)
        for (int i = 0; i < ds.n(); ++i)
            if (!ds.observed(j, i)) return true;
    return false;
}

}  // namespace

Dataset svi_transform(const Dataset& ds) {
    if (!any_missing(ds)) return ds;
    return fill_with(ds, observed_fill(ds, true));
}

namespace {

// dense symmetric solve with partial pivoting, small systems only
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int d = static_cast<int>(b.size());
    for (int c = 0; c < d; ++c) {
        int piv = c;
        for (int r = c + 1; r < d; ++r)
            if (std::fabs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) >
                std::fabs(a[static_cast<std::size_t>(piv)][static_cast<std::size_t>(c)]))
                piv = r;
        std::swap(a[static_cast<std::size_t>(c)], a[static_cast<std::size_t>(piv)]);
        std::swap(b[static_cast<std::size_t>(c)], b[static_cast<std::size_t>(piv)]);
        double diag = a[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        if (diag == 0.0) continue;
        for (int r = c + 1; r < d; ++r) {
            double f = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] / diag;
            if (f == 0.0) continue;
            for (int cc = c; cc < d; ++cc)
                a[static_cast<std::size_t>(r)][static_cast<std::size_t>(cc)] -=
                    f * a[static_cast<std::size_t>(c)][static_cast<std::size_t>(cc)];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(c)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    for (int r = d - 1; r >= 0; --r) {
        double s = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < d; ++c)
            s -= a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
        double diag = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
        x[static_cast<std::size_t>(r)] = diag == 0.0 ? 0.0 : s / diag;
    }
    return x;
}

struct WorkingData {
    std::vector<std::vector<double>> num;   // per predictor, current values
    std::vector<std::vector<int>> cat;      // per predictor, current codes
    std::vector<std::vector<int>> missing;  // originally missing rows per predictor
};

// offsets into the one-hot expanded feature vector, one slice per predictor
struct FeatureLayout {
    std::vector<int> offset;
    std::vector<int> width;
    int total = 0;
};

FeatureLayout make_layout(const Schema& schema) {
    FeatureLayout lay;
    for (const auto& p : schema.predictors) {
        lay.offset.push_back(lay.total);
        int w = p.kind == PredictorKind::numeric ? 1 : static_cast<int>(p.categories.size());
        lay.width.push_back(w);
        lay.total += w;
    }
    return lay;
}

// features of every predictor except `skip`, in schema order
void features_excluding(const Schema& schema, const WorkingData& wd, const FeatureLayout& lay,
                        int row, int skip, std::vector<double>& out) {
    out.clear();
    for (int p = 0; p < schema.m(); ++p) {
        if (p == skip) continue;
        if (schema.predictors[static_cast<std::size_t>(p)].kind == PredictorKind::numeric) {
            out.push_back(wd.num[static_cast<std::size_t>(p)][static_cast<std::size_t>(row)]);
        } else {
            for (int c = 0; c < lay.width[static_cast<std::size_t>(p)]; ++c)
                out.push_back(wd.cat[static_cast<std::size_t>(p)][static_cast<std::size_t>(row)] == c
                                  ? 1.0
                                  : 0.0);
        }
    }
}

constexpr double kRidge = 1e-6;

Dataset pvi_run(const Dataset& ds, int iterations, const FillValues& warm) {
    const Schema& schema = ds.schema();
    const int m = ds.m();
    const int n = ds.n();

    WorkingData wd;
    wd.num.resize(static_cast<std::size_t>(m));
    wd.cat.resize(static_cast<std::size_t>(m));
    wd.missing.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const bool numeric = schema.predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric;
        auto& nv = wd.num[static_cast<std::size_t>(j)];
        auto& cv = wd.cat[static_cast<std::size_t>(j)];
        if (numeric)
            nv.assign(static_cast<std::size_t>(n), 0.0);
        else
            cv.assign(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i) {
            if (ds.observed(j, i)) {
                if (numeric)
                    nv[static_cast<std::size_t>(i)] = ds.num(j, i);
                else
                    cv[static_cast<std::size_t>(i)] = ds.cat(j, i);
            } else {
                wd.missing[static_cast<std::size_t>(j)].push_back(i);
                if (numeric)
                    nv[static_cast<std::size_t>(i)] = warm.num[static_cast<std::size_t>(j)];
                else
                    cv[static_cast<std::size_t>(i)] = warm.cat[static_cast<std::size_t>(j)];
            }
        }
    }

    FeatureLayout lay = make_layout(schema);
    std::vector<double> feat;

    for (int round = 0; round < iterations; ++round) {
        for (int j = 0; j < m; ++j) {
            const auto& miss = wd.missing[static_cast<std::size_t>(j)];
            if (miss.empty()) continue;
            std::vector<int> obs_rows;
            for (int i = 0; i < n; ++i)
                if (ds.observed(j, i)) obs_rows.push_back(i);
            if (obs_rows.empty()) continue;  // warm fill stands

            const bool numeric = schema.predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric;
            const int df = lay.total - lay.width[static_cast<std::size_t>(j)];

            if (numeric) {
                const int d = df + 1;  // intercept first
                std::vector<std::vector<double>> a(static_cast<std::size_t>(d),
                                                   std::vector<double>(static_cast<std::size_t>(d), 0.0));
                std::vector<double> b(static_cast<std::size_t>(d), 0.0);
                for (int i : obs_rows) {
                    features_excluding(schema, wd, lay, i, j, feat);
                    const double w = ds.weight(i);
                    const double y = ds.num(j, i);
                    a[0][0] += w;
                    b[0] += w * y;
                    for (int r = 0; r < df; ++r) {
                        const double xr = feat[static_cast<std::size_t>(r)];
                        if (xr == 0.0) continue;
                        a[static_cast<std::size_t>(r + 1)][0] += w * xr;
                        a[0][static_cast<std::size_t>(r + 1)] += w * xr;
                        b[static_cast<std::size_t>(r + 1)] += w * xr * y;
                        for (int c = 0; c < df; ++c)
                            a[static_cast<std::size_t>(r + 1)][static_cast<std::size_t>(c + 1)] +=
                                w * xr * feat[static_cast<std::size_t>(c)];
                    }
                }
                for (int r = 0; r < d; ++r) a[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] += kRidge;
                auto beta = solve_linear(std::move(a), std::move(b));
                for (int i : miss) {
                    features_excluding(schema, wd, lay, i, j, feat);
                    double v = beta[0];
                    for (int r = 0; r < df; ++r)
                        v += beta[static_cast<std::size_t>(r + 1)] * feat[static_cast<std::size_t>(r)];
                    wd.num[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                        std::isfinite(v) ? v : warm.num[static_cast<std::size_t>(j)];
                }
            } else {
                std::vector<double> mean(static_cast<std::size_t>(df), 0.0);
                std::vector<double> sq(static_cast<std::size_t>(df), 0.0);
                double sw = 0.0;
                for (int i : obs_rows) {
                    features_excluding(schema, wd, lay, i, j, feat);
                    const double w = ds.weight(i);
                    sw += w;
                    for (int r = 0; r < df; ++r) {
                        mean[static_cast<std::size_t>(r)] += w * feat[static_cast<std::size_t>(r)];
                        sq[static_cast<std::size_t>(r)] +=
                            w * feat[static_cast<std::size_t>(r)] * feat[static_cast<std::size_t>(r)];
                    }
                }
                std::vector<double> sd(static_cast<std::size_t>(df), 0.0);
                for (int r = 0; r < df; ++r) {
                    mean[static_cast<std::size_t>(r)] /= sw;
                    double var = sq[static_cast<std::size_t>(r)] / sw -
                                 mean[static_cast<std::size_t>(r)] * mean[static_cast<std::size_t>(r)];
                    sd[static_cast<std::size_t>(r)] = var > 1e-24 ? std::sqrt(var) : 0.0;
                }
                auto standardized = [&](std::vector<double>& v) {
                    for (int r = 0; r < df; ++r)
                        v[static_cast<std::size_t>(r)] =
                            sd[static_cast<std::size_t>(r)] > 0.0
                                ? (v[static_cast<std::size_t>(r)] - mean[static_cast<std::size_t>(r)]) /
                                      sd[static_cast<std::size_t>(r)]
                                : 0.0;
                };
                const int levels = lay.width[static_cast<std::size_t>(j)];
                std::vector<std::vector<double>> centroid(
                    static_cast<std::size_t>(levels), std::vector<double>(static_cast<std::size_t>(df), 0.0));
                std::vector<double> cw(static_cast<std::size_t>(levels), 0.0);
                for (int i : obs_rows) {
                    features_excluding(schema, wd, lay, i, j, feat);
                    standardized(feat);
                    const int lvl = ds.cat(j, i);
                    const double w = ds.weight(i);
                    cw[static_cast<std::size_t>(lvl)] += w;
                    for (int r = 0; r < df; ++r)
                        centroid[static_cast<std::size_t>(lvl)][static_cast<std::size_t>(r)] +=
                            w * feat[static_cast<std::size_t>(r)];
                }
                for (int l = 0; l < levels; ++l)
                    if (cw[static_cast<std::size_t>(l)] > 0.0)
                        for (int r = 0; r < df; ++r)
                            centroid[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] /=
                                cw[static_cast<std::size_t>(l)];
                for (int i : miss) {
                    features_excluding(schema, wd, lay, i, j, feat);
                    standardized(feat);
                    int pick = -1;
                    double best_dist = std::numeric_limits<double>::infinity();
                    for (int l = 0; l < levels; ++l) {
                        if (cw[static_cast<std::size_t>(l)] <= 0.0) continue;
                        double d2 = 0.0;
                        for (int r = 0; r < df; ++r) {
                            double diff = feat[static_cast<std::size_t>(r)] -
                                          centroid[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)];
                            d2 += diff * diff;
                        }
                        if (d2 < best_dist) {
                            best_dist = d2;
                            pick = l;
                        }
                    }
                    if (pick >= 0) wd.cat[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = pick;
                }
            }
        }
    }

    std::vector<Dataset::Column> cols;
    cols.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        Dataset::Column col;
        col.obs.assign(static_cast<std::size_t>(n), 1);
        if (schema.predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric)
            col.num = wd.num[static_cast<std::size_t>(j)];
        else
            col.cat.assign(wd.cat[static_cast<std::size_t>(j)].begin(),
                           wd.cat[static_cast<std::size_t>(j)].end());
        cols.push_back(std::move(col));
    }
    return Dataset::from_columns(schema, std::move(cols), copy_response(ds), copy_weights(ds));
}

}  // namespace

Dataset pvi_transform(const Dataset& ds, int iterations) {
    if (!any_missing(ds)) return ds;
    return pvi_run(ds, iterations, observed_fill(ds, true));
}

namespace {

struct ScState {
    std::vector<double> sentinel;
    std::vector<std::uint8_t> extend;
};

ScState sc_state_from(const Dataset& ds, Diagnostics* diag) {
    const int m = ds.m();
    ScState st;
    st.sentinel.assign(static_cast<std::size_t>(m), 0.0);
    st.extend.assign(static_cast<std::size_t>(m), 0);
    for (int j = 0; j < m; ++j) {
        const auto& pred = ds.schema().predictors[static_cast<std::size_t>(j)];
        if (pred.kind == PredictorKind::numeric) {
            bool any = false;
            double lo = 0.0, hi = 0.0;
            for (int i = 0; i < ds.n(); ++i) {
                if (!ds.observed(j, i)) continue;
                double v = ds.num(j, i);
                if (!any) {
                    lo = hi = v;
                    any = true;
                } else {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
            if (!any) {
                st.sentinel[static_cast<std::size_t>(j)] = 0.0;
                warn_into(diag, "column '" + pred.name + "' is fully missing; sentinel set to 0");
            } else {
                double range = hi - lo;
                st.sentinel[static_cast<std::size_t>(j)] = hi + (range > 0.0 ? range : 1.0);
            }
        } else {
            for (int i = 0; i < ds.n(); ++i)
                if (!ds.observed(j, i)) {
                    st.extend[static_cast<std::size_t>(j)] = 1;
                    break;
                }
        }
    }
    return st;
}

Dataset sc_apply(const Dataset& ds, const ScState& st, const FillValues* fallback, Diagnostics* diag) {
    Schema schema = ds.schema();
    for (int j = 0; j < ds.m(); ++j)
        if (st.extend[static_cast<std::size_t>(j)])
            schema.predictors[static_cast<std::size_t>(j)].categories.push_back(kMissingCategory);

    std::vector<Dataset::Column> cols;
    cols.reserve(static_cast<std::size_t>(ds.m()));
    for (int j = 0; j < ds.m(); ++j) {
        Dataset::Column col = ds.column(j);
        const auto& pred = ds.schema().predictors[static_cast<std::size_t>(j)];
        for (int i = 0; i < ds.n(); ++i) {
            if (col.obs[static_cast<std::size_t>(i)]) continue;
            if (pred.kind == PredictorKind::numeric) {
                col.num[static_cast<std::size_t>(i)] = st.sentinel[static_cast<std::size_t>(j)];
            } else if (st.extend[static_cast<std::size_t>(j)]) {
                col.cat[static_cast<std::size_t>(i)] =
                    static_cast<std::int32_t>(pred.categories.size());  // the appended category
            } else if (fallback) {
                col.cat[static_cast<std::size_t>(i)] = fallback->cat[static_cast<std::size_t>(j)];
                warn_into(diag, "column '" + pred.name +
                                    "' had no missing cells when the model was fitted; filling with the "
                                    "training mode");
            }
            col.obs[static_cast<std::size_t>(i)] = 1;
        }
        cols.push_back(std::move(col));
    }
    return Dataset::from_columns(std::move(schema), std::move(cols), copy_response(ds), copy_weights(ds));
}

}  // namespace

Dataset sc_transform(const Dataset& ds, Diagnostics* diag) {
    if (!any_missing(ds)) return ds;
    return sc_apply(ds, sc_state_from(ds, diag), nullptr, diag);
}

std::pair<Dataset, AvailabilityPolicy> best_transform(const Dataset& ds,
                                                      const AvailabilityPolicy& user_policy) {
    const int m = ds.m();
    assert(static_cast<int>(user_policy.root_mask.size()) == m);
    std::vector<std::uint8_t> user_gated(static_cast<std::size_t>(m), 0);
    for (const auto& r : user_policy.rules) user_gated[static_cast<std::size_t>(r.target)] = 1;

    std::vector<int> to_gate;
    for (int j = 0; j < m; ++j) {
        if (user_gated[static_cast<std::size_t>(j)]) continue;
        for (int i = 0; i < ds.n(); ++i)
            if (!ds.observed(j, i)) {
                to_gate.push_back(j);
                break;
            }
    }

    Dataset out = ds;
    for (int j : to_gate) out = derive_missingness(out, j);

    AvailabilityPolicy pol = user_policy;
    pol.root_mask.resize(static_cast<std::size_t>(m + static_cast<int>(to_gate.size())), 1);
    for (std::size_t t = 0; t < to_gate.size(); ++t) {
        pol.root_mask[static_cast<std::size_t>(to_gate[t])] = 0;
        UnlockRule rule;
        rule.gate = m + static_cast<int>(t);
        rule.target = to_gate[t];
        rule.numeric = false;
        rule.categories = {1};
        pol.rules.push_back(std::move(rule));
    }
    pol.schema_fp = out.schema().fingerprint();
    return {std::move(out), std::move(pol)};
}

bool split_goes_left(const Dataset& ds, const Split& split, int row) {
    assert(ds.observed(split.predictor, row));
    if (split.numeric) return ds.num(split.predictor, row) <= split.threshold;
    return std::binary_search(split.left_categories.begin(), split.left_categories.end(),
                              ds.cat(split.predictor, row));
}

namespace {

double midpoint(double lo, double hi) { return lo + (hi - lo) * 0.5; }

}  // namespace

SurrogateList build_surrogates(const Dataset& ds, const Region& region, const Split& primary,
                               int max_s) {
    SurrogateList out;
    const int jp = primary.predictor;

    double wl = 0.0, wr = 0.0;
    for (std::size_t r = 0; r < region.rows.size(); ++r) {
        int i = region.rows[r];
        if (!ds.observed(jp, i)) continue;
        (split_goes_left(ds, primary, i) ? wl : wr) += region.weights[r];
    }
    out.fallback_right = wr > wl;
    const double wp = wl + wr;
    if (wp <= 0.0) return out;
    const double baseline = std::max(wl, wr) / wp;

    struct Candidate {
        SurrogateRule rule;
        int predictor;
    };
    std::vector<Candidate> found;

    for (int j = 0; j < ds.m(); ++j) {
        if (j == jp) continue;
        // rows observed on both predictors
        std::vector<int> rows;
        std::vector<double> weights;
        std::vector<std::uint8_t> prim_left;
        double wboth = 0.0;
        for (std::size_t r = 0; r < region.rows.size(); ++r) {
            int i = region.rows[r];
            if (!ds.observed(jp, i) || !ds.observed(j, i)) continue;
            rows.push_back(i);
            weights.push_back(region.weights[r]);
            prim_left.push_back(split_goes_left(ds, primary, i) ? 1 : 0);
            wboth += region.weights[r];
        }
        if (rows.empty()) continue;

        double best_agreement = -1.0;
        SurrogateRule best_rule;

        if (ds.schema().predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric) {
            std::vector<int> order(rows.size());
            for (std::size_t t = 0; t < rows.size(); ++t) order[t] = static_cast<int>(t);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                return ds.num(j, rows[static_cast<std::size_t>(a)]) <
                       ds.num(j, rows[static_cast<std::size_t>(b)]);
            });
            double wl_total = 0.0;
            for (std::size_t t = 0; t < rows.size(); ++t)
                if (prim_left[t]) wl_total += weights[t];
            const double wr_total = wboth - wl_total;
            // sweep: rows at or below the threshold routed left by the candidate
            double wl_low = 0.0, wr_low = 0.0;
            std::size_t t = 0;
            while (t < order.size()) {
                double v = ds.num(j, rows[static_cast<std::size_t>(order[t])]);
                std::size_t u = t;
                while (u < order.size() && ds.num(j, rows[static_cast<std::size_t>(order[u])]) == v) {
                    const auto idx = static_cast<std::size_t>(order[u]);
                    (prim_left[idx] ? wl_low : wr_low) += weights[idx];
                    ++u;
                }
                if (u == order.size()) break;
                double straight = (wl_low + (wr_total - wr_low)) / wboth;
                double agree = std::max(straight, 1.0 - straight);
                if (agree > best_agreement) {
                    best_agreement = agree;
                    best_rule.split.predictor = j;
                    best_rule.split.numeric = true;
                    best_rule.split.threshold =
                        midpoint(v, ds.num(j, rows[static_cast<std::size_t>(order[u])]));
                    best_rule.split.left_categories.clear();
                    best_rule.mirrored = straight < 1.0 - straight;
                    best_rule.agreement = agree;
                }
                t = u;
            }
        } else {
            const int levels =
                static_cast<int>(ds.schema().predictors[static_cast<std::size_t>(j)].categories.size());
            std::vector<double> cwl(static_cast<std::size_t>(levels), 0.0);
            std::vector<double> cwr(static_cast<std::size_t>(levels), 0.0);
            for (std::size_t t = 0; t < rows.size(); ++t) {
                int c = ds.cat(j, rows[t]);
                (prim_left[t] ? cwl : cwr)[static_cast<std::size_t>(c)] += weights[t];
            }
            // optimal left set: categories whose mass leans to the primary's left
            std::vector<int> left;
            for (int c = 0; c < levels; ++c)
                if (cwl[static_cast<std::size_t>(c)] > cwr[static_cast<std::size_t>(c)]) left.push_back(c);
            if (left.empty() || static_cast<int>(left.size()) == levels) {
                // force a proper subset at the least agreement cost
                int pick = -1;
                double cost = std::numeric_limits<double>::infinity();
                for (int c = 0; c < levels; ++c) {
                    double d = left.empty()
                                   ? cwr[static_cast<std::size_t>(c)] - cwl[static_cast<std::size_t>(c)]
                                   : cwl[static_cast<std::size_t>(c)] - cwr[static_cast<std::size_t>(c)];
                    if (d < cost) {
                        cost = d;
                        pick = c;
                    }
                }
                if (left.empty())
                    left.push_back(pick);
                else
                    left.erase(std::find(left.begin(), left.end(), pick));
                if (left.empty() || static_cast<int>(left.size()) == levels) continue;
            }
            double agree = 0.0;
            for (int c = 0; c < levels; ++c) {
                bool in_left = std::binary_search(left.begin(), left.end(), c);
                agree += in_left ? cwl[static_cast<std::size_t>(c)] : cwr[static_cast<std::size_t>(c)];
            }
            agree /= wboth;
            best_agreement = agree;
            best_rule.split.predictor = j;
            best_rule.split.numeric = false;
            best_rule.split.left_categories = std::move(left);
            best_rule.mirrored = false;
            best_rule.agreement = agree;
        }

        if (best_agreement > baseline) found.push_back({best_rule, j});
    }

    std::stable_sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
        if (a.rule.agreement != b.rule.agreement) return a.rule.agreement > b.rule.agreement;
        return a.predictor < b.predictor;
    });
    for (std::size_t t = 0; t < found.size() && static_cast<int>(t) < max_s; ++t)
        out.rules.push_back(found[t].rule);
    return out;
}

std::pair<Region, Region> dbi_route_fit(const Dataset& ds, const Region& region, const Split& split) {
    double wl = 0.0, wr = 0.0;
    for (std::size_t r = 0; r < region.rows.size(); ++r) {
        int i = region.rows[r];
        if (!ds.observed(split.predictor, i)) continue;
        (split_goes_left(ds, split, i) ? wl : wr) += region.weights[r];
    }
    assert(wl + wr > 0.0);
    const double fl = wl / (wl + wr);
    const double fr = wr / (wl + wr);

    Region left, right;
    left.available = region.available;
    right.available = region.available;
    for (std::size_t r = 0; r < region.rows.size(); ++r) {
        int i = region.rows[r];
        double w = region.weights[r];
        if (ds.observed(split.predictor, i)) {
            auto& side = split_goes_left(ds, split, i) ? left : right;
            side.rows.push_back(i);
            side.weights.push_back(w);
        } else {
            left.rows.push_back(i);
            left.weights.push_back(w * fl);
            right.rows.push_back(i);
            right.weights.push_back(w * fr);
        }
    }
    return {std::move(left), std::move(right)};
}

FittedTransform fit_transform(const Strategy& strategy, const Dataset& train,
                              const AvailabilityPolicy& user_policy, Diagnostics* diag) {
    if (user_policy.schema_fp != train.schema().fingerprint())
        throw Error(ErrorKind::fingerprint, "policy was compiled against a different schema");

    FittedTransform out{train, user_policy, {}};
    out.state.tag = strategy.tag;
    out.state.pvi_iterations = strategy.pvi_iterations;

    switch (strategy.tag) {
        case StrategyTag::none:
        case StrategyTag::dbi:
        case StrategyTag::surrogate:
            break;
        case StrategyTag::svi: {
            FillValues f = observed_fill(train, true);
            out.state.fill_num = f.num;
            out.state.fill_cat = f.cat;
            if (any_missing(train)) out.train = fill_with(train, f);
            break;
        }
        case StrategyTag::pvi: {
            FillValues f = observed_fill(train, true);
            out.state.fill_num = f.num;
            out.state.fill_cat = f.cat;
            if (any_missing(train)) out.train = pvi_run(train, strategy.pvi_iterations, f);
            break;
        }
        case StrategyTag::sc: {
            ScState st = sc_state_from(train, diag);
            FillValues f = observed_fill(train, false);
            out.state.sentinel = st.sentinel;
            out.state.sc_extended = st.extend;
            out.state.fill_cat = f.cat;
            if (any_missing(train)) out.train = sc_apply(train, st, nullptr, diag);
            out.policy.schema_fp = out.train.schema().fingerprint();
            break;
        }
        case StrategyTag::best: {
            auto [ds2, pol2] = best_transform(train, user_policy);
            for (int j = train.m(); j < ds2.m(); ++j) {
                const std::string& mname = ds2.schema().predictors[static_cast<std::size_t>(j)].name;
                // M(<name>) wraps the gated predictor's name
                out.state.gated.push_back(mname.substr(2, mname.size() - 3));
            }
            out.train = std::move(ds2);
            out.policy = std::move(pol2);
            break;
        }
    }
    return out;
}

Dataset apply_transform(const TransformState& state, const Schema& model_schema, const Dataset& ds,
                        Diagnostics* diag) {
    Dataset out = ds;
    switch (state.tag) {
        case StrategyTag::none:
        case StrategyTag::dbi:
        case StrategyTag::surrogate:
            break;
        case StrategyTag::svi: {
            FillValues f;
            f.num = state.fill_num;
            f.cat = state.fill_cat;
            if (any_missing(out)) out = fill_with(out, f);
            break;
        }
        case StrategyTag::pvi: {
            FillValues f;
            f.num = state.fill_num;
            f.cat = state.fill_cat;
            if (any_missing(out)) out = pvi_run(out, state.pvi_iterations, f);
            break;
        }
        case StrategyTag::sc: {
            ScState st;
            st.sentinel = state.sentinel;
            st.extend = state.sc_extended;
            FillValues f;
            f.cat = state.fill_cat;
            bool extends_any = false;
            for (auto e : st.extend) extends_any |= e != 0;
            if (any_missing(out) || extends_any) out = sc_apply(out, st, &f, diag);
            break;
        }
        case StrategyTag::best: {
            for (const auto& name : state.gated) {
                int j = out.schema().index_of(name);
                if (j < 0)
                    throw Error(ErrorKind::fingerprint,
                                "gated predictor '" + name + "' is absent from the data");
                out = derive_missingness(out, j);
            }
            break;
        }
    }
    if (out.schema().fingerprint() != model_schema.fingerprint())
        throw Error(ErrorKind::fingerprint, "data does not match the schema the model was fitted on");
    return out;
}

}  // namespace best
