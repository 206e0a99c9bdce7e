#include "best/availability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "best/splitting.hpp"

namespace best {

bool AvailabilityPolicy::trivial() const {
    if (!rules.empty()) return false;
    for (std::uint8_t b : root_mask)
        if (!b) return false;
    return true;
}

std::string AvailabilityPolicy::fingerprint() const {
    Fnv1a h;
    h.add(schema_fp);
    for (std::uint8_t b : root_mask) h.add_byte(b ? '1' : '0');
    for (const auto& r : rules) {
        h.add(std::to_string(r.gate));
        h.add(std::to_string(r.target));
        if (r.numeric) {
            h.add(r.dir_ge ? "ge" : "le");
            h.add(format_double(r.bound));
            h.add(r.side_right ? "right" : "left");
        } else {
            h.add("in");
            for (int c : r.categories) h.add(std::to_string(c));
        }
    }
    return h.hex();
}

AvailabilityPolicy compile_availability(const PolicyDesc& spec, const Schema& schema,
                                        Diagnostics* diag) {
    AvailabilityPolicy out;
    out.schema_fp = schema.fingerprint();
    const int m = schema.m();

    if (spec.has_root) {
        out.root_mask.assign(static_cast<std::size_t>(m), 0);
        for (const auto& name : spec.root) {
            int j = schema.index_of(name);
            if (j < 0) throw Error(ErrorKind::policy, "unknown predictor '" + name + "' in root list");
            out.root_mask[static_cast<std::size_t>(j)] = 1;
        }
    } else {
        out.root_mask.assign(static_cast<std::size_t>(m), 1);
    }

    for (const auto& rd : spec.rules) {
        if (!rd.enable)
            throw Error(ErrorKind::policy,
                        "rule on '" + rd.gate + "' disables '" + rd.target + "'; only enabling rules are allowed");
        UnlockRule rule;
        rule.gate = schema.index_of(rd.gate);
        if (rule.gate < 0) throw Error(ErrorKind::policy, "unknown gate predictor '" + rd.gate + "'");
        rule.target = schema.index_of(rd.target);
        if (rule.target < 0) throw Error(ErrorKind::policy, "unknown target predictor '" + rd.target + "'");

        const Predictor& gate = schema.predictors[static_cast<std::size_t>(rule.gate)];
        if (gate.kind == PredictorKind::numeric) {
            if (!rd.cond.numeric || !rd.cond.has_bound)
                throw Error(ErrorKind::policy,
                            "rule on numeric predictor '" + rd.gate + "' needs a threshold bound");
            if (!std::isfinite(rd.cond.bound))
                throw Error(ErrorKind::policy, "non-finite bound in rule on '" + rd.gate + "'");
            rule.numeric = true;
            rule.dir_ge = rd.cond.dir_ge;
            rule.bound = rd.cond.bound;
            rule.side_right = rd.cond.side_right;
        } else {
            if (rd.cond.numeric)
                throw Error(ErrorKind::policy,
                            "rule on categorical predictor '" + rd.gate + "' cannot carry a bound");
            if (rd.cond.categories.empty())
                throw Error(ErrorKind::policy, "rule on '" + rd.gate + "' lists no categories");
            rule.numeric = false;
            for (const auto& c : rd.cond.categories) {
                int code = gate.category_code(c);
                if (code < 0)
                    throw Error(ErrorKind::policy,
                                "unknown category '" + c + "' of predictor '" + rd.gate + "'");
                rule.categories.push_back(code);
            }
            std::sort(rule.categories.begin(), rule.categories.end());
            rule.categories.erase(std::unique(rule.categories.begin(), rule.categories.end()),
                                  rule.categories.end());
        }
        out.rules.push_back(std::move(rule));
    }

    for (int j = 0; j < m; ++j) {
        if (out.root_mask[static_cast<std::size_t>(j)]) continue;
        bool reachable = false;
        for (const auto& r : out.rules)
            if (r.target == j) reachable = true;
        if (!reachable)
            warn_into(diag, "predictor '" + schema.predictors[static_cast<std::size_t>(j)].name +
                                "' is not at the root and no rule unlocks it");
    }
    return out;
}

namespace {

bool is_subset(const std::vector<int>& sub, const std::vector<int>& super) {
    return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

}  // namespace

std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>
apply_unlock(const AvailabilityPolicy& policy, const std::vector<std::uint8_t>& available,
             const Split& split, const Schema& schema) {
    assert(split.predictor >= 0 && split.predictor < schema.m());
    assert(available[static_cast<std::size_t>(split.predictor)]);
    auto left = available;
    auto right = available;

    std::vector<int> right_categories;
    if (!split.numeric) {
        const auto& cats = schema.predictors[static_cast<std::size_t>(split.predictor)].categories;
        for (int c = 0; c < static_cast<int>(cats.size()); ++c)
            if (!std::binary_search(split.left_categories.begin(), split.left_categories.end(), c))
                right_categories.push_back(c);
    }

    for (const auto& rule : policy.rules) {
        if (rule.gate != split.predictor) continue;
        if (rule.numeric != split.numeric) continue;
        if (rule.numeric) {
            bool fires = rule.dir_ge ? split.threshold >= rule.bound : split.threshold <= rule.bound;
            if (!fires) continue;
            auto& mask = rule.side_right ? right : left;
            mask[static_cast<std::size_t>(rule.target)] = 1;
        } else {
            if (is_subset(split.left_categories, rule.categories))
                left[static_cast<std::size_t>(rule.target)] = 1;
            if (is_subset(right_categories, rule.categories))
                right[static_cast<std::size_t>(rule.target)] = 1;
        }
    }
    return {std::move(left), std::move(right)};
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream in(line);
    std::string t;
    while (in >> t) toks.push_back(t);
    return toks;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_line(int lineno, const std::string& why) {
    throw Error(ErrorKind::policy, "policy line " + std::to_string(lineno) + ": " + why);
}

}  // namespace

PolicyDesc parse_policy_text(const std::string& text) {
    PolicyDesc desc;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool seen_any = false;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        if (!seen_any) {
            seen_any = true;
            if (line.rfind("root:", 0) == 0) {
                desc.has_root = true;
                desc.root = split_ws(line.substr(5));
                continue;
            }
        } else if (line.rfind("root:", 0) == 0) {
            bad_line(lineno, "root list must be the first directive");
        }

        auto toks = split_ws(line);
        if (toks.empty() || toks[0] != "unlock") bad_line(lineno, "expected 'unlock' or 'root:'");
        if (toks.size() < 4 || toks[2] != "when") bad_line(lineno, "expected 'unlock <target> when <gate> ...'");
        RuleDesc rule;
        rule.target = toks[1];
        rule.gate = toks[3];

        if (toks.size() >= 5 && toks[4] == "in") {
            std::size_t open = line.find('{');
            std::size_t close = line.find('}');
            if (open == std::string::npos || close == std::string::npos || close < open)
                bad_line(lineno, "expected '{cat,...}' after 'in'");
            std::string body = line.substr(open + 1, close - open - 1);
            std::size_t pos = 0;
            while (pos <= body.size()) {
                std::size_t comma = body.find(',', pos);
                std::string cat = trim(comma == std::string::npos ? body.substr(pos)
                                                                  : body.substr(pos, comma - pos));
                if (!cat.empty()) rule.cond.categories.push_back(cat);
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            if (rule.cond.categories.empty()) bad_line(lineno, "empty category set");
            rule.cond.numeric = false;
        } else {
            if (toks.size() != 7) bad_line(lineno, "expected '<gate> {>|<=} <bound> side={left|right}'");
            const std::string& op = toks[4];
            if (op == ">" || op == ">=")
                rule.cond.dir_ge = true;
            else if (op == "<" || op == "<=")
                rule.cond.dir_ge = false;
            else
                bad_line(lineno, "unknown comparator '" + op + "'");
            if (!parse_double(toks[5], rule.cond.bound)) bad_line(lineno, "bad bound '" + toks[5] + "'");
            rule.cond.has_bound = true;
            if (toks[6] == "side=left")
                rule.cond.side_right = false;
            else if (toks[6] == "side=right")
                rule.cond.side_right = true;
            else
                bad_line(lineno, "expected side=left or side=right");
            rule.cond.numeric = true;
        }
        desc.rules.push_back(std::move(rule));
    }
    return desc;
}

std::string policy_to_text(const AvailabilityPolicy& policy, const Schema& schema) {
    std::string out = "root:";
    for (int j = 0; j < schema.m(); ++j)
        if (policy.root_mask[static_cast<std::size_t>(j)])
            out += " " + schema.predictors[static_cast<std::size_t>(j)].name;
    out += "\n";
    for (const auto& r : policy.rules) {
        const auto& gate = schema.predictors[static_cast<std::size_t>(r.gate)];
        const auto& target = schema.predictors[static_cast<std::size_t>(r.target)];
        out += "unlock " + target.name + " when " + gate.name;
        if (r.numeric) {
            out += std::string(" ") + (r.dir_ge ? ">" : "<=") + " " + format_double(r.bound) +
                   (r.side_right ? " side=right" : " side=left");
        } else {
            out += " in {";
            for (std::size_t t = 0; t < r.categories.size(); ++t) {
                if (t) out += ",";
                out += gate.categories[static_cast<std::size_t>(r.categories[t])];
            }
            out += "}";
        }
        out += "\n";
    }
    return out;
}

}  // namespace best
