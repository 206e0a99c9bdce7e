#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "best/availability.hpp"
#include "best/data.hpp"

namespace best {

enum class Measure : std::uint8_t { gini, deviance, misclassification };

Measure parse_measure(std::string_view name);
std::string measure_name(Measure m);

struct ClassHistogram {
    std::vector<double> counts;
    double total = 0.0;

    ClassHistogram() = default;
    explicit ClassHistogram(int k) : counts(static_cast<std::size_t>(k), 0.0) {}

    void add(int cls, double w) {
        counts[static_cast<std::size_t>(cls)] += w;
        total += w;
    }
    int k() const { return static_cast<int>(counts.size()); }
    // lowest class index wins ties
    int argmax() const;
};

struct Split {
    int predictor = -1;
    bool numeric = true;
    double threshold = 0.0;
    std::vector<int> left_categories;  // sorted codes, nonempty proper subset
};

struct SplitEvaluation {
    Split split;
    double total_impurity = 0.0;
    ClassHistogram left_histogram;
    ClassHistogram right_histogram;
};

double impurity(const ClassHistogram& h, Measure measure);

// true when a beats b under the deterministic ordering used to resolve
// equal-impurity candidates
bool split_precedes(const Split& a, const Split& b);

std::vector<Split> enumerate_splits(const Dataset& ds, const Region& region, int j);

std::optional<SplitEvaluation> best_split(const Dataset& ds, const Region& region, Measure measure,
                                          double min_child_weight);

}  // namespace best
