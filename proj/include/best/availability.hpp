#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "best/data.hpp"
#include "best/util.hpp"

namespace best {

struct Split;

// A subspace of observations plus the predictors that may split it.
// Row weights already include any fractional routing applied upstream.
struct Region {
    std::vector<int> rows;
    std::vector<double> weights;
    std::vector<std::uint8_t> available;

    double total_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

// Unresolved policy, as parsed from text or assembled programmatically.
struct RuleCondDesc {
    bool numeric = false;
    bool has_bound = false;
    double bound = 0.0;
    bool dir_ge = true;      // split point >= bound; otherwise <= bound
    bool side_right = true;  // child receiving the update on numeric rules
    std::vector<std::string> categories;
};

struct RuleDesc {
    std::string gate;
    std::string target;
    bool enable = true;
    RuleCondDesc cond;
};

struct PolicyDesc {
    bool has_root = false;  // absent root line means everything starts available
    std::vector<std::string> root;
    std::vector<RuleDesc> rules;
};

struct UnlockRule {
    int gate = -1;
    int target = -1;
    bool numeric = true;
    bool dir_ge = true;
    double bound = 0.0;
    bool side_right = true;
    std::vector<int> categories;  // sorted codes; fires when the child's
                                  // category set is contained in this set
};

struct AvailabilityPolicy {
    std::vector<std::uint8_t> root_mask;
    std::vector<UnlockRule> rules;
    std::string schema_fp;

    bool trivial() const;
    std::string fingerprint() const;
};

AvailabilityPolicy compile_availability(const PolicyDesc& spec, const Schema& schema,
                                        Diagnostics* diag = nullptr);

// Child masks after splitting; masks only ever gain bits.
std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>
apply_unlock(const AvailabilityPolicy& policy, const std::vector<std::uint8_t>& available,
             const Split& split, const Schema& schema);

PolicyDesc parse_policy_text(const std::string& text);
std::string policy_to_text(const AvailabilityPolicy& policy, const Schema& schema);

}  // namespace best
