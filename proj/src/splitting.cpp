#include "best/splitting.hpp"

#include <algorithm>
#include <cmath>

namespace best {

Measure parse_measure(std::string_view name) {
    if (name == "gini") return Measure::gini;
    if (name == "deviance") return Measure::deviance;
    if (name == "misclassification") return Measure::misclassification;
    throw Error(ErrorKind::schema, "unknown impurity measure '" + std::string(name) + "'");
}

std::string measure_name(Measure m) {
    switch (m) {
        case Measure::gini: return "gini";
        case Measure::deviance: return "deviance";
        case Measure::misclassification: return "misclassification";
    }
    return "gini";
}

int ClassHistogram::argmax() const {
    int best = 0;
    for (int q = 1; q < k(); ++q)
        if (counts[static_cast<std::size_t>(q)] > counts[static_cast<std::size_t>(best)]) best = q;
    return best;
}

double impurity(const ClassHistogram& h, Measure measure) {
    if (!(h.total > 0.0)) throw Error(ErrorKind::schema, "impurity of an empty histogram");
    switch (measure) {
        case Measure::gini: {
            double s = 0.0;
            for (double c : h.counts) {
                double p = c / h.total;
                s += p * (1.0 - p);
            }
            return s;
        }
        case Measure::deviance: {
            double s = 0.0;
            for (double c : h.counts) {
                if (c <= 0.0) continue;
                double p = c / h.total;
                s -= p * std::log(p);
            }
            return s;
        }
        case Measure::misclassification: {
            double mx = 0.0;
            for (double c : h.counts) mx = std::max(mx, c / h.total);
            return 1.0 - mx;
        }
    }
    return 0.0;
}

bool split_precedes(const Split& a, const Split& b) {
    if (a.predictor != b.predictor) return a.predictor < b.predictor;
    if (a.numeric) return a.threshold < b.threshold;
    return std::lexicographical_compare(a.left_categories.begin(), a.left_categories.end(),
                                        b.left_categories.begin(), b.left_categories.end());
}

namespace {

struct ObservedRow {
    double value = 0.0;  // numeric value or category code
    int code = 0;
    int cls = 0;
    double w = 0.0;
};

std::vector<ObservedRow> gather_observed(const Dataset& ds, const Region& region, int j) {
    std::vector<ObservedRow> out;
    out.reserve(region.rows.size());
    const bool num = ds.schema().predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric;
    for (std::size_t r = 0; r < region.rows.size(); ++r) {
        int i = region.rows[r];
        if (!ds.observed(j, i)) continue;
        ObservedRow row;
        if (num)
            row.value = ds.num(j, i);
        else
            row.code = ds.cat(j, i);
        row.cls = ds.response(i);
        row.w = region.weights[r];
        out.push_back(row);
    }
    return out;
}

std::vector<double> distinct_sorted_values(std::vector<ObservedRow> rows) {
    std::sort(rows.begin(), rows.end(),
              [](const ObservedRow& a, const ObservedRow& b) { return a.value < b.value; });
    std::vector<double> vals;
    for (const auto& r : rows)
        if (vals.empty() || r.value != vals.back()) vals.push_back(r.value);
    return vals;
}

double midpoint(double lo, double hi) { return lo + (hi - lo) * 0.5; }

// Distinct in-region categories with their class histograms, ascending code.
struct CategoryStat {
    int code = 0;
    ClassHistogram hist;
};

std::vector<CategoryStat> category_stats(const std::vector<ObservedRow>& rows, int k) {
    std::vector<CategoryStat> stats;
    for (const auto& r : rows) {
        auto it = std::find_if(stats.begin(), stats.end(),
                               [&](const CategoryStat& s) { return s.code == r.code; });
        if (it == stats.end()) {
            CategoryStat s;
            s.code = r.code;
            s.hist = ClassHistogram(k);
            stats.push_back(std::move(s));
            it = stats.end() - 1;
        }
        it->hist.add(r.cls, r.w);
    }
    std::sort(stats.begin(), stats.end(),
              [](const CategoryStat& a, const CategoryStat& b) { return a.code < b.code; });
    return stats;
}

// Category orderings evaluated when the exhaustive enumeration is too large:
// sort by second-class proportion, emit prefix subsets. Two classes only.
std::vector<int> proportion_order(const std::vector<CategoryStat>& stats) {
    std::vector<int> order(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double pa = stats[static_cast<std::size_t>(a)].hist.counts[1] /
                    stats[static_cast<std::size_t>(a)].hist.total;
        double pb = stats[static_cast<std::size_t>(b)].hist.counts[1] /
                    stats[static_cast<std::size_t>(b)].hist.total;
        if (pa != pb) return pa < pb;
        return stats[static_cast<std::size_t>(a)].code < stats[static_cast<std::size_t>(b)].code;
    });
    return order;
}

constexpr int kExhaustiveCap = 15;

std::vector<std::vector<int>> categorical_left_sets(const std::vector<CategoryStat>& stats, int k) {
    const int c = static_cast<int>(stats.size());
    std::vector<std::vector<int>> sets;
    if (c < 2) return sets;
    if (c <= kExhaustiveCap) {
        // anchor the largest code on the right so complements are never repeated
        const std::uint32_t limit = 1u << (c - 1);
        for (std::uint32_t bits = 1; bits < limit; ++bits) {
            std::vector<int> left;
            for (int t = 0; t < c - 1; ++t)
                if (bits & (1u << t)) left.push_back(stats[static_cast<std::size_t>(t)].code);
            sets.push_back(std::move(left));
        }
        return sets;
    }
    if (k != 2)
        throw Error(ErrorKind::schema, "categorical predictor with more than " +
                                           std::to_string(kExhaustiveCap) +
                                           " in-region categories requires a two-class response");
    auto order = proportion_order(stats);
    for (int t = 1; t < c; ++t) {
        std::vector<int> left;
        left.reserve(static_cast<std::size_t>(t));
        for (int u = 0; u < t; ++u) left.push_back(stats[static_cast<std::size_t>(order[u])].code);
        std::sort(left.begin(), left.end());
        sets.push_back(std::move(left));
    }
    return sets;
}

}  // namespace

std::vector<Split> enumerate_splits(const Dataset& ds, const Region& region, int j) {
    assert(j >= 0 && j < ds.m());
    auto rows = gather_observed(ds, region, j);
    if (rows.empty())
        throw Error(ErrorKind::schema, "predictor '" + ds.schema().predictors[static_cast<std::size_t>(j)].name +
                                           "' has no observed values in the region");
    std::vector<Split> out;
    if (ds.schema().predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric) {
        auto vals = distinct_sorted_values(std::move(rows));
        for (std::size_t t = 0; t + 1 < vals.size(); ++t) {
            Split s;
            s.predictor = j;
            s.numeric = true;
            s.threshold = midpoint(vals[t], vals[t + 1]);
            out.push_back(std::move(s));
        }
    } else {
        auto stats = category_stats(rows, ds.k());
        for (auto& left : categorical_left_sets(stats, ds.k())) {
            Split s;
            s.predictor = j;
            s.numeric = false;
            s.left_categories = std::move(left);
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::optional<SplitEvaluation> best_split(const Dataset& ds, const Region& region, Measure measure,
                                          double min_child_weight) {
    std::optional<SplitEvaluation> best;
    const int k = ds.k();

    auto consider = [&](Split&& split, ClassHistogram&& lh, ClassHistogram&& rh) {
        if (lh.total < min_child_weight || rh.total < min_child_weight) return;
        if (!(lh.total > 0.0) || !(rh.total > 0.0)) return;
        double total = lh.total * impurity(lh, measure) + rh.total * impurity(rh, measure);
        if (best && total > best->total_impurity) return;
        if (best && total == best->total_impurity && !split_precedes(split, best->split)) return;
        SplitEvaluation ev;
        ev.split = std::move(split);
        ev.total_impurity = total;
        ev.left_histogram = std::move(lh);
        ev.right_histogram = std::move(rh);
        best = std::move(ev);
    };

    for (int j = 0; j < ds.m(); ++j) {
        if (!region.available[static_cast<std::size_t>(j)]) continue;
        auto rows = gather_observed(ds, region, j);
        if (rows.empty()) continue;

        if (ds.schema().predictors[static_cast<std::size_t>(j)].kind == PredictorKind::numeric) {
            std::sort(rows.begin(), rows.end(),
                      [](const ObservedRow& a, const ObservedRow& b) { return a.value < b.value; });
            ClassHistogram right(k);
            for (const auto& r : rows) right.add(r.cls, r.w);
            ClassHistogram left(k);
            std::size_t t = 0;
            while (t < rows.size()) {
                std::size_t u = t;
                while (u < rows.size() && rows[u].value == rows[t].value) {
                    left.add(rows[u].cls, rows[u].w);
                    right.add(rows[u].cls, -rows[u].w);
                    ++u;
                }
                if (u == rows.size()) break;
                Split s;
                s.predictor = j;
                s.numeric = true;
                s.threshold = midpoint(rows[t].value, rows[u].value);
                consider(std::move(s), ClassHistogram(left), ClassHistogram(right));
                t = u;
            }
        } else {
            auto stats = category_stats(rows, k);
            if (static_cast<int>(stats.size()) > kExhaustiveCap && k != 2) continue;
            for (auto& left_set : categorical_left_sets(stats, k)) {
                ClassHistogram lh(k), rh(k);
                for (const auto& st : stats) {
                    bool in_left = std::binary_search(left_set.begin(), left_set.end(), st.code);
                    auto& h = in_left ? lh : rh;
                    for (int q = 0; q < k; ++q)
                        if (st.hist.counts[static_cast<std::size_t>(q)] != 0.0)
                            h.add(q, st.hist.counts[static_cast<std::size_t>(q)]);
                }
                Split s;
                s.predictor = j;
                s.numeric = false;
                s.left_categories = std::move(left_set);
                consider(std::move(s), std::move(lh), std::move(rh));
            }
        }
    }
    return best;
}

}  // namespace best
