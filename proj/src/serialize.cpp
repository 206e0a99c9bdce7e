#include "best/serialize.hpp"

#include <charconv>
#include <sstream>

#include "best/csv.hpp"

namespace best {

namespace {

std::string esc(const std::string& s) {
    if (s.empty()) return "%00";
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '%': out += "%25"; break;
            case ' ': out += "%20"; break;
            case '\t': out += "%09"; break;
            case '\n': out += "%0A"; break;
            case '\r': out += "%0D"; break;
            default: out.push_back(c); break;
        }
    }
    return out;
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string unesc(const std::string& s, const std::string& origin) {
    if (s == "%00") return "";
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out.push_back(s[i]);
            continue;
        }
        if (i + 2 >= s.size())
            throw Error(ErrorKind::io, origin + ": bad escape in '" + s + "'");
        int hi = hex_digit(s[i + 1]), lo = hex_digit(s[i + 2]);
        if (hi < 0 || lo < 0) throw Error(ErrorKind::io, origin + ": bad escape in '" + s + "'");
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
    }
    return out;
}

std::string bits_to_string(const std::vector<std::uint8_t>& bits) {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) s[i] = '1';
    return s;
}

struct TokenReader {
    std::istringstream in;
    std::string origin;

    TokenReader(const std::string& text, std::string orig) : in(text), origin(std::move(orig)) {}

    std::string next() {
        std::string t;
        if (!(in >> t)) throw Error(ErrorKind::io, origin + ": truncated model file");
        return t;
    }
    void expect(const char* lit) {
        std::string t = next();
        if (t != lit)
            throw Error(ErrorKind::io,
                        origin + ": expected '" + lit + "', got '" + t + "'");
    }
    std::string name() { return unesc(next(), origin); }
    double real() {
        std::string t = next();
        double v;
        if (!parse_double(t, v)) throw Error(ErrorKind::io, origin + ": bad number '" + t + "'");
        return v;
    }
    long long integer() {
        std::string t = next();
        long long v;
        if (!parse_int(t, v)) throw Error(ErrorKind::io, origin + ": bad integer '" + t + "'");
        return v;
    }
    std::uint64_t u64() {
        std::string t = next();
        std::uint64_t v = 0;
        auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size())
            throw Error(ErrorKind::io, origin + ": bad seed '" + t + "'");
        return v;
    }
    std::vector<std::uint8_t> bits(std::size_t len) {
        if (len == 0) return {};
        std::string t = next();
        if (t.size() != len) throw Error(ErrorKind::io, origin + ": bad bit string '" + t + "'");
        std::vector<std::uint8_t> out(len, 0);
        for (std::size_t i = 0; i < len; ++i) {
            if (t[i] != '0' && t[i] != '1')
                throw Error(ErrorKind::io, origin + ": bad bit string '" + t + "'");
            out[i] = t[i] == '1';
        }
        return out;
    }
};

void write_schema(std::ostringstream& out, const char* which, const Schema& s) {
    out << "schema " << which << "\n";
    out << "predictors " << s.m() << "\n";
    for (const auto& p : s.predictors) {
        if (p.kind == PredictorKind::numeric) {
            out << "p numeric " << esc(p.name) << "\n";
        } else {
            out << "p categorical " << esc(p.name) << " " << p.categories.size();
            for (const auto& c : p.categories) out << " " << esc(c);
            out << "\n";
        }
    }
    out << "labels " << s.k();
    for (const auto& l : s.response_labels) out << " " << esc(l);
    out << "\nend\n";
}

Schema read_schema(TokenReader& tr, const char* which) {
    tr.expect("schema");
    tr.expect(which);
    tr.expect("predictors");
    long long m = tr.integer();
    Schema s;
    for (long long j = 0; j < m; ++j) {
        tr.expect("p");
        std::string kind = tr.next();
        Predictor p;
        p.name = tr.name();
        if (kind == "numeric") {
            p.kind = PredictorKind::numeric;
        } else if (kind == "categorical") {
            p.kind = PredictorKind::categorical;
            long long c = tr.integer();
            for (long long q = 0; q < c; ++q) p.categories.push_back(tr.name());
        } else {
            throw Error(ErrorKind::io, tr.origin + ": bad predictor kind '" + kind + "'");
        }
        s.predictors.push_back(std::move(p));
    }
    tr.expect("labels");
    long long k = tr.integer();
    for (long long q = 0; q < k; ++q) s.response_labels.push_back(tr.name());
    tr.expect("end");
    s.validate();
    return s;
}

void write_split(std::ostringstream& out, const Split& sp) {
    if (sp.numeric) {
        out << "num " << format_double(sp.threshold);
    } else {
        out << "cat " << sp.left_categories.size();
        for (int c : sp.left_categories) out << " " << c;
    }
}

Split read_split(TokenReader& tr, int pred) {
    Split sp;
    sp.predictor = pred;
    std::string kind = tr.next();
    if (kind == "num") {
        sp.numeric = true;
        sp.threshold = tr.real();
    } else if (kind == "cat") {
        sp.numeric = false;
        long long c = tr.integer();
        for (long long q = 0; q < c; ++q)
            sp.left_categories.push_back(static_cast<int>(tr.integer()));
    } else {
        throw Error(ErrorKind::io, tr.origin + ": bad split kind '" + kind + "'");
    }
    return sp;
}

void write_tree(std::ostringstream& out, const Tree& t) {
    out << "tree\n";
    out << "beta " << format_double(t.beta) << " measure " << measure_name(t.measure)
        << " strategy " << strategy_name(t.strategy) << " dropped "
        << format_double(t.dropped_weight) << "\n";
    out << "schema_fp " << t.schema_fp << " policy_fp " << t.policy_fp << "\n";
    out << "nodes " << t.nodes.size() << "\n";
    for (const auto& nd : t.nodes) {
        if (nd.is_leaf) {
            out << "leaf";
        } else {
            out << "split " << nd.split.predictor << " ";
            write_split(out, nd.split);
            out << " " << nd.left << " " << nd.right;
        }
        out << " " << nd.label << " " << format_double(nd.count) << " "
            << format_double(nd.node_impurity) << " " << nd.depth << " " << (nd.fallback_right ? 1 : 0);
        out << " " << nd.distribution.counts.size();
        for (double c : nd.distribution.counts) out << " " << format_double(c);
        out << " " << format_double(nd.distribution.total);
        out << " " << nd.available.size() << " " << bits_to_string(nd.available);
        out << " " << (nd.is_leaf ? 0 : nd.surrogates.size()) << "\n";
        if (!nd.is_leaf) {
            for (const auto& sr : nd.surrogates) {
                out << "s " << sr.split.predictor << " ";
                write_split(out, sr.split);
                out << " " << (sr.mirrored ? 1 : 0) << " " << format_double(sr.agreement) << "\n";
            }
        }
    }
    out << "end\n";
}

Tree read_tree(TokenReader& tr) {
    tr.expect("tree");
    Tree t;
    tr.expect("beta");
    t.beta = tr.real();
    tr.expect("measure");
    t.measure = parse_measure(tr.next());
    tr.expect("strategy");
    t.strategy = parse_strategy(tr.next());
    tr.expect("dropped");
    t.dropped_weight = tr.real();
    tr.expect("schema_fp");
    t.schema_fp = tr.next();
    tr.expect("policy_fp");
    t.policy_fp = tr.next();
    tr.expect("nodes");
    long long count = tr.integer();
    t.nodes.reserve(static_cast<std::size_t>(count));
    for (long long q = 0; q < count; ++q) {
        TreeNode nd;
        std::string tag = tr.next();
        if (tag == "split") {
            nd.is_leaf = false;
            int pred = static_cast<int>(tr.integer());
            nd.split = read_split(tr, pred);
            nd.left = static_cast<int>(tr.integer());
            nd.right = static_cast<int>(tr.integer());
        } else if (tag != "leaf") {
            throw Error(ErrorKind::io, tr.origin + ": bad node tag '" + tag + "'");
        }
        nd.label = static_cast<int>(tr.integer());
        nd.count = tr.real();
        nd.node_impurity = tr.real();
        nd.depth = static_cast<int>(tr.integer());
        nd.fallback_right = tr.integer() != 0;
        long long k = tr.integer();
        nd.distribution.counts.resize(static_cast<std::size_t>(k));
        for (long long c = 0; c < k; ++c) nd.distribution.counts[static_cast<std::size_t>(c)] = tr.real();
        nd.distribution.total = tr.real();
        long long mlen = tr.integer();
        nd.available = tr.bits(static_cast<std::size_t>(mlen));
        long long ns = tr.integer();
        for (long long u = 0; u < ns; ++u) {
            tr.expect("s");
            SurrogateRule sr;
            int pred = static_cast<int>(tr.integer());
            sr.split = read_split(tr, pred);
            sr.mirrored = tr.integer() != 0;
            sr.agreement = tr.real();
            nd.surrogates.push_back(std::move(sr));
        }
        t.nodes.push_back(std::move(nd));
    }
    tr.expect("end");
    return t;
}

void write_transform(std::ostringstream& out, const TransformState& st) {
    out << "transform\n";
    out << "tag " << strategy_name(st.tag) << " pvi " << st.pvi_iterations << "\n";
    out << "fill_num " << st.fill_num.size();
    for (double v : st.fill_num) out << " " << format_double(v);
    out << "\nfill_cat " << st.fill_cat.size();
    for (int v : st.fill_cat) out << " " << v;
    out << "\nsentinel " << st.sentinel.size();
    for (double v : st.sentinel) out << " " << format_double(v);
    out << "\nsc_extended " << st.sc_extended.size();
    if (!st.sc_extended.empty()) out << " " << bits_to_string(st.sc_extended);
    out << "\ngated " << st.gated.size();
    for (const auto& g : st.gated) out << " " << esc(g);
    out << "\nend\n";
}

TransformState read_transform(TokenReader& tr) {
    tr.expect("transform");
    TransformState st;
    tr.expect("tag");
    st.tag = parse_strategy(tr.next());
    tr.expect("pvi");
    st.pvi_iterations = static_cast<int>(tr.integer());
    tr.expect("fill_num");
    long long n = tr.integer();
    for (long long q = 0; q < n; ++q) st.fill_num.push_back(tr.real());
    tr.expect("fill_cat");
    n = tr.integer();
    for (long long q = 0; q < n; ++q) st.fill_cat.push_back(static_cast<int>(tr.integer()));
    tr.expect("sentinel");
    n = tr.integer();
    for (long long q = 0; q < n; ++q) st.sentinel.push_back(tr.real());
    tr.expect("sc_extended");
    n = tr.integer();
    st.sc_extended = tr.bits(static_cast<std::size_t>(n));
    tr.expect("gated");
    n = tr.integer();
    for (long long q = 0; q < n; ++q) st.gated.push_back(tr.name());
    tr.expect("end");
    return st;
}

void write_policy(std::ostringstream& out, const AvailabilityPolicy& p) {
    out << "policy mask " << p.root_mask.size() << " " << bits_to_string(p.root_mask);
    out << " rules " << p.rules.size() << "\n";
    for (const auto& r : p.rules) {
        out << "rule " << r.gate << " " << r.target;
        if (r.numeric) {
            out << " num " << (r.dir_ge ? "ge" : "le") << " " << format_double(r.bound) << " "
                << (r.side_right ? "right" : "left");
        } else {
            out << " cat " << r.categories.size();
            for (int c : r.categories) out << " " << c;
        }
        out << "\n";
    }
}

AvailabilityPolicy read_policy(TokenReader& tr, const Schema& model_schema) {
    tr.expect("policy");
    tr.expect("mask");
    long long mlen = tr.integer();
    AvailabilityPolicy p;
    p.root_mask = tr.bits(static_cast<std::size_t>(mlen));
    tr.expect("rules");
    long long n = tr.integer();
    for (long long q = 0; q < n; ++q) {
        tr.expect("rule");
        UnlockRule r;
        r.gate = static_cast<int>(tr.integer());
        r.target = static_cast<int>(tr.integer());
        std::string kind = tr.next();
        if (kind == "num") {
            r.numeric = true;
            r.dir_ge = tr.next() == "ge";
            r.bound = tr.real();
            r.side_right = tr.next() == "right";
        } else if (kind == "cat") {
            r.numeric = false;
            long long c = tr.integer();
            for (long long u = 0; u < c; ++u) r.categories.push_back(static_cast<int>(tr.integer()));
        } else {
            throw Error(ErrorKind::io, tr.origin + ": bad rule kind '" + kind + "'");
        }
        p.rules.push_back(std::move(r));
    }
    p.schema_fp = model_schema.fingerprint();
    return p;
}

void write_forest(std::ostringstream& out, const Forest& f) {
    out << "forest\n";
    const auto& c = f.cfg;
    out << "n_trees " << c.n_trees << " mtry " << c.mtry << " bootstrap " << (c.bootstrap ? 1 : 0)
        << " beta " << format_double(c.beta) << " measure " << measure_name(c.measure)
        << " strategy " << strategy_name(c.strategy.tag) << " max_depth " << c.max_depth << " seed "
        << c.seed << " threads " << c.threads << "\n";
    out << "schema_fp " << f.schema_fp << "\n";
    out << "seeds " << f.seeds.size();
    for (std::uint64_t s : f.seeds) out << " " << s;
    out << "\n";
    for (const auto& t : f.trees) write_tree(out, t);
    out << "end\n";
}

Forest read_forest(TokenReader& tr) {
    tr.expect("forest");
    Forest f;
    tr.expect("n_trees");
    f.cfg.n_trees = static_cast<int>(tr.integer());
    tr.expect("mtry");
    f.cfg.mtry = static_cast<int>(tr.integer());
    tr.expect("bootstrap");
    f.cfg.bootstrap = tr.integer() != 0;
    tr.expect("beta");
    f.cfg.beta = tr.real();
    tr.expect("measure");
    f.cfg.measure = parse_measure(tr.next());
    tr.expect("strategy");
    f.cfg.strategy.tag = parse_strategy(tr.next());
    tr.expect("max_depth");
    f.cfg.max_depth = static_cast<int>(tr.integer());
    tr.expect("seed");
    f.cfg.seed = tr.u64();
    tr.expect("threads");
    f.cfg.threads = static_cast<int>(tr.integer());
    tr.expect("schema_fp");
    f.schema_fp = tr.next();
    tr.expect("seeds");
    long long n = tr.integer();
    for (long long q = 0; q < n; ++q) f.seeds.push_back(tr.u64());
    for (long long q = 0; q < n; ++q) f.trees.push_back(read_tree(tr));
    tr.expect("end");
    return f;
}

}  // namespace

std::string model_to_text(const Model& model) {
    std::ostringstream out;
    out << kModelMarker << "\n";
    out << "kind " << (model.is_forest ? "forest" : "tree") << "\n";
    write_schema(out, "input", model.input_schema);
    write_schema(out, "model", model.model_schema);
    write_transform(out, model.state);
    write_policy(out, model.policy);
    if (model.is_forest)
        write_forest(out, model.forest);
    else
        write_tree(out, model.tree);
    return out.str();
}

Model model_from_text(const std::string& text, const std::string& origin) {
    TokenReader tr(text, origin);
    std::string marker = tr.next();
    if (marker != kModelMarker)
        throw Error(ErrorKind::io, origin + ": not a model file (missing " +
                                       std::string(kModelMarker) + " marker)");
    Model model;
    tr.expect("kind");
    std::string kind = tr.next();
    if (kind == "forest")
        model.is_forest = true;
    else if (kind != "tree")
        throw Error(ErrorKind::io, origin + ": bad model kind '" + kind + "'");
    model.input_schema = read_schema(tr, "input");
    model.model_schema = read_schema(tr, "model");
    model.state = read_transform(tr);
    model.policy = read_policy(tr, model.model_schema);
    const std::string model_fp = model.model_schema.fingerprint();
    const std::string policy_fp = model.policy.fingerprint();
    if (model.is_forest) {
        model.forest = read_forest(tr);
        if (model.forest.schema_fp != model_fp)
            throw Error(ErrorKind::fingerprint, origin + ": forest does not match the stored schema");
        for (const auto& t : model.forest.trees)
            if (t.schema_fp != model_fp || t.policy_fp != policy_fp)
                throw Error(ErrorKind::fingerprint,
                            origin + ": tree does not match the stored schema or policy");
    } else {
        model.tree = read_tree(tr);
        if (model.tree.schema_fp != model_fp)
            throw Error(ErrorKind::fingerprint, origin + ": tree does not match the stored schema");
        if (model.tree.policy_fp != policy_fp)
            throw Error(ErrorKind::fingerprint, origin + ": tree does not match the stored policy");
    }
    return model;
}

void save_model(const Model& model, const std::string& path) {
    write_text_file(path, model_to_text(model));
}

Model load_model(const std::string& path) {
    return model_from_text(read_text_file(path), path);
}

}  // namespace best
