#include "best/data.hpp"

#include <cmath>
#include <unordered_set>

namespace best {

namespace {

bool has_forbidden_chars(const std::string& s) {
    for (char c : s)
        if (c == '\n' || c == '\r' || c == '\t' || c == ' ') return true;
    return s.empty();
}

} // namespace

void Schema::validate() const {
    std::unordered_set<std::string> names;
    for (const auto& p : predictors) {
        if (has_forbidden_chars(p.name))
            throw Error(ErrorKind::schema, "predictor name '" + p.name + "' is empty or contains whitespace");
        if (!names.insert(p.name).second)
            throw Error(ErrorKind::schema, "duplicate predictor name '" + p.name + "'");
        if (p.kind == PredictorKind::categorical) {
            if (p.categories.empty())
                throw Error(ErrorKind::schema, "categorical predictor '" + p.name + "' has no categories");
            std::unordered_set<std::string> cats;
            for (const auto& c : p.categories) {
                if (c.find('\n') != std::string::npos || c.find('\r') != std::string::npos)
                    throw Error(ErrorKind::schema, "category label contains a newline in predictor '" + p.name + "'");
                if (!cats.insert(c).second)
                    throw Error(ErrorKind::schema,
                                "duplicate category '" + c + "' in predictor '" + p.name + "'");
            }
        } else if (!p.categories.empty()) {
            throw Error(ErrorKind::schema, "numeric predictor '" + p.name + "' carries categories");
        }
    }
    if (response_labels.size() < 2)
        throw Error(ErrorKind::schema, "response needs at least 2 class labels");
    std::unordered_set<std::string> labels;
    for (const auto& l : response_labels) {
        if (l.empty() || l.find('\n') != std::string::npos)
            throw Error(ErrorKind::schema, "bad response label '" + l + "'");
        if (!labels.insert(l).second)
            throw Error(ErrorKind::schema, "duplicate response label '" + l + "'");
    }
}

std::string Schema::fingerprint() const {
    Fnv1a h;
    for (const auto& p : predictors) {
        h.add(p.name);
        h.add(p.kind == PredictorKind::numeric ? "num" : "cat");
        for (const auto& c : p.categories) h.add(c);
    }
    h.add_byte(0x1e);
    for (const auto& l : response_labels) h.add(l);
    return h.hex();
}

Dataset Dataset::from_columns(Schema schema, std::vector<Column> columns, std::vector<int> response,
                              std::vector<double> weights) {
    schema.validate();
    Dataset ds;
    if (columns.size() != static_cast<std::size_t>(schema.m()))
        throw Error(ErrorKind::schema, "column count does not match schema");
    int n = -1;
    for (int j = 0; j < schema.m(); ++j) {
        const auto& col = columns[j];
        const bool is_num = schema.predictors[j].kind == PredictorKind::numeric;
        int len = static_cast<int>(is_num ? col.num.size() : col.cat.size());
        if (n < 0) n = len;
        if (len != n || static_cast<int>(col.obs.size()) != n)
            throw Error(ErrorKind::schema, "ragged column '" + schema.predictors[j].name + "'");
        if (!is_num) {
            int c = static_cast<int>(schema.predictors[j].categories.size());
            for (int i = 0; i < n; ++i)
                if (col.obs[i] && (col.cat[i] < 0 || col.cat[i] >= c))
                    throw Error(ErrorKind::schema,
                                "category code out of range in '" + schema.predictors[j].name + "'");
        } else {
            for (int i = 0; i < n; ++i)
                if (col.obs[i] && !std::isfinite(col.num[i]))
                    throw Error(ErrorKind::schema,
                                "non-finite value in '" + schema.predictors[j].name + "'");
        }
    }
    if (n < 0) n = static_cast<int>(response.size());
    if (!response.empty()) {
        if (static_cast<int>(response.size()) != n)
            throw Error(ErrorKind::schema, "response length does not match columns");
        for (int r : response)
            if (r < 0 || r >= schema.k())
                throw Error(ErrorKind::schema, "response code out of range");
    }
    if (weights.empty()) weights.assign(static_cast<std::size_t>(n), 1.0);
    if (static_cast<int>(weights.size()) != n)
        throw Error(ErrorKind::schema, "weights length does not match columns");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw Error(ErrorKind::schema, "weights must be strictly positive and finite");
    ds.schema_ = std::move(schema);
    ds.n_ = n;
    ds.columns_ = std::move(columns);
    ds.response_ = std::move(response);
    ds.weights_ = std::move(weights);
    return ds;
}

double Dataset::total_weight() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
}

Dataset Dataset::with_mask(int j, std::vector<std::uint8_t> mask) const {
    assert(j >= 0 && j < m());
    assert(static_cast<int>(mask.size()) == n_);
    Dataset out = *this;
    out.columns_[j].obs = std::move(mask);
    return out;
}

Dataset build_dataset(const std::vector<std::vector<std::string>>& rows, const Schema& schema,
                      const std::set<std::string>& missing_tokens) {
    schema.validate();
    if (rows.empty()) throw Error(ErrorKind::schema, "no observations");
    const int m = schema.m();
    const int n = static_cast<int>(rows.size());

    std::vector<Dataset::Column> columns(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        auto& col = columns[j];
        col.obs.assign(static_cast<std::size_t>(n), 0);
        if (schema.predictors[j].kind == PredictorKind::numeric)
            col.num.assign(static_cast<std::size_t>(n), 0.0);
        else
            col.cat.assign(static_cast<std::size_t>(n), 0);
    }
    std::vector<int> response(static_cast<std::size_t>(n), 0);

    for (int i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<int>(row.size()) != m + 1)
            throw Error(ErrorKind::schema, "ragged record at row " + std::to_string(i + 1) + ": expected " +
                                               std::to_string(m + 1) + " cells, got " +
                                               std::to_string(row.size()));
        for (int j = 0; j < m; ++j) {
            const std::string& cell = row[static_cast<std::size_t>(j)];
            if (missing_tokens.count(cell)) continue; // stays masked
            auto& col = columns[j];
            if (schema.predictors[j].kind == PredictorKind::numeric) {
                double v = 0.0;
                if (!parse_double(cell, v) || !std::isfinite(v))
                    throw Error(ErrorKind::schema, "unparseable numeric cell '" + cell + "' at row " +
                                                       std::to_string(i + 1) + ", predictor '" +
                                                       schema.predictors[j].name + "'");
                col.num[static_cast<std::size_t>(i)] = v;
            } else {
                int code = schema.predictors[j].category_code(cell);
                if (code < 0)
                    throw Error(ErrorKind::schema, "unknown category '" + cell + "' at row " +
                                                       std::to_string(i + 1) + ", predictor '" +
                                                       schema.predictors[j].name + "'");
                col.cat[static_cast<std::size_t>(i)] = code;
            }
            col.obs[static_cast<std::size_t>(i)] = 1;
        }
        const std::string& resp = row[static_cast<std::size_t>(m)];
        int code = schema.response_code(resp);
        if (code < 0)
            throw Error(ErrorKind::schema,
                        "unknown response label '" + resp + "' at row " + std::to_string(i + 1));
        response[static_cast<std::size_t>(i)] = code;
    }
    return Dataset::from_columns(schema, std::move(columns), std::move(response));
}

std::string missingness_name(const std::string& predictor_name) { return "M(" + predictor_name + ")"; }

Dataset derive_missingness(const Dataset& ds, int j) {
    if (j < 0 || j >= ds.m())
        throw Error(ErrorKind::schema, "predictor index " + std::to_string(j) + " out of range");
    Schema schema = ds.schema();
    Predictor dummy;
    dummy.name = missingness_name(schema.predictors[static_cast<std::size_t>(j)].name);
    dummy.kind = PredictorKind::categorical;
    dummy.categories = {"0", "1"};
    if (schema.index_of(dummy.name) >= 0)
        throw Error(ErrorKind::schema, "predictor '" + dummy.name + "' already exists");
    schema.predictors.push_back(dummy);

    std::vector<Dataset::Column> columns;
    columns.reserve(static_cast<std::size_t>(ds.m()) + 1);
    for (int c = 0; c < ds.m(); ++c) columns.push_back(ds.column(c));
    Dataset::Column ind;
    ind.obs.assign(static_cast<std::size_t>(ds.n()), 1);
    ind.cat.resize(static_cast<std::size_t>(ds.n()));
    for (int i = 0; i < ds.n(); ++i) ind.cat[static_cast<std::size_t>(i)] = ds.observed(j, i) ? 1 : 0;
    columns.push_back(std::move(ind));

    std::vector<int> response;
    if (ds.has_response()) {
        response.resize(static_cast<std::size_t>(ds.n()));
        for (int i = 0; i < ds.n(); ++i) response[static_cast<std::size_t>(i)] = ds.response(i);
    }
    std::vector<double> weights(static_cast<std::size_t>(ds.n()));
    for (int i = 0; i < ds.n(); ++i) weights[static_cast<std::size_t>(i)] = ds.weight(i);
    return Dataset::from_columns(std::move(schema), std::move(columns), std::move(response),
                                 std::move(weights));
}

} // namespace best
