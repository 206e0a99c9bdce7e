#include "best/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace best {

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    CsvTable table;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool row_started = false;
    std::size_t i = 0;
    auto end_cell = [&] {
        row.push_back(cell);
        cell.clear();
    };
    auto end_row = [&] {
        end_cell();
        if (table.header.empty())
            table.header = std::move(row);
        else
            table.rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
            ++i;
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                row_started = true;
                ++i;
                break;
            case ',':
                end_cell();
                row_started = true;
                ++i;
                break;
            case '\r':
                ++i;
                break;
            case '\n':
                end_row();
                ++i;
                break;
            default:
                cell.push_back(c);
                row_started = true;
                ++i;
                break;
        }
    }
    if (row_started || !cell.empty() || !row.empty()) end_row();
    if (quoted) throw Error(ErrorKind::io, origin + ": unterminated quoted field");
    if (table.header.empty()) throw Error(ErrorKind::io, origin + ": empty file");
    return table;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorKind::io, "failed reading '" + path + "'");
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path), path); }

std::map<std::string, PredictorKind> parse_types_file(const std::string& text,
                                                      const std::string& origin) {
    std::map<std::string, PredictorKind> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string name, kind;
        if (!(ls >> name)) continue;
        std::string extra;
        if (!(ls >> kind) || (ls >> extra))
            throw Error(ErrorKind::schema,
                        origin + ":" + std::to_string(lineno) + ": expected '<column> <kind>'");
        if (kind == "numeric")
            out[name] = PredictorKind::numeric;
        else if (kind == "categorical")
            out[name] = PredictorKind::categorical;
        else
            throw Error(ErrorKind::schema, origin + ":" + std::to_string(lineno) +
                                               ": kind must be numeric or categorical, got '" +
                                               kind + "'");
    }
    return out;
}

namespace {

int find_response_column(const CsvTable& table, const CsvOptions& opt) {
    if (opt.response.empty()) return static_cast<int>(table.header.size()) - 1;
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (table.header[c] == opt.response) return static_cast<int>(c);
    throw Error(ErrorKind::schema, "response column '" + opt.response + "' not in the header");
}

void check_rectangular(const CsvTable& table) {
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        if (table.rows[i].size() != table.header.size())
            throw Error(ErrorKind::schema,
                        "ragged record at row " + std::to_string(i + 1) + ": expected " +
                            std::to_string(table.header.size()) + " cells, got " +
                            std::to_string(table.rows[i].size()));
}

}  // namespace

Schema infer_schema(const CsvTable& table, const CsvOptions& opt, int* response_col,
                    Diagnostics* diag) {
    check_rectangular(table);
    if (table.rows.empty()) throw Error(ErrorKind::schema, "no observations");
    int resp = find_response_column(table, opt);
    if (resp < 0) throw Error(ErrorKind::schema, "csv has no columns");
    Schema schema;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (static_cast<int>(c) == resp) continue;
        Predictor p;
        p.name = table.header[c];
        auto over = opt.type_overrides.find(p.name);
        bool all_numeric = true;
        bool any_observed = false;
        std::vector<std::string> levels;
        for (const auto& row : table.rows) {
            const std::string& cell = row[c];
            if (opt.missing_tokens.count(cell)) continue;
            any_observed = true;
            double v;
            if (!parse_double(cell, v) || !std::isfinite(v)) all_numeric = false;
            levels.push_back(cell);
        }
        if (over != opt.type_overrides.end())
            p.kind = over->second;
        else if (!any_observed) {
            p.kind = PredictorKind::numeric;
            warn_into(diag, "column '" + p.name + "' is fully missing; treating it as numeric");
        } else {
            p.kind = all_numeric ? PredictorKind::numeric : PredictorKind::categorical;
        }
        if (p.kind == PredictorKind::categorical) {
            if (!any_observed)
                throw Error(ErrorKind::schema,
                            "categorical column '" + p.name + "' has no observed values");
            std::sort(levels.begin(), levels.end());
            levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
            p.categories = std::move(levels);
        }
        schema.predictors.push_back(std::move(p));
    }
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string& cell = table.rows[i][static_cast<std::size_t>(resp)];
        if (opt.missing_tokens.count(cell))
            throw Error(ErrorKind::schema, "missing response at row " + std::to_string(i + 1));
        labels.push_back(cell);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    schema.response_labels = std::move(labels);
    schema.validate();
    if (response_col) *response_col = resp;
    return schema;
}

Dataset dataset_from_csv(const CsvTable& table, const CsvOptions& opt, Diagnostics* diag) {
    int resp = -1;
    Schema schema = infer_schema(table, opt, &resp, diag);
    std::vector<std::vector<std::string>> records;
    records.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        std::vector<std::string> rec;
        rec.reserve(table.header.size());
        for (std::size_t c = 0; c < row.size(); ++c)
            if (static_cast<int>(c) != resp) rec.push_back(row[c]);
        rec.push_back(row[static_cast<std::size_t>(resp)]);
        records.push_back(std::move(rec));
    }
    return build_dataset(records, schema, opt.missing_tokens);
}

Dataset dataset_for_schema(const CsvTable& table, const Schema& schema,
                           const std::set<std::string>& missing_tokens) {
    check_rectangular(table);
    if (table.rows.empty()) throw Error(ErrorKind::schema, "no observations");
    const int n = static_cast<int>(table.rows.size());

    std::vector<int> source(static_cast<std::size_t>(schema.m()), -1);
    for (int j = 0; j < schema.m(); ++j) {
        for (std::size_t c = 0; c < table.header.size(); ++c)
            if (table.header[c] == schema.predictors[j].name) source[j] = static_cast<int>(c);
        if (source[j] < 0)
            throw Error(ErrorKind::schema,
                        "column '" + schema.predictors[j].name + "' not in the csv header");
    }
    int resp_col = -1;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        bool used = false;
        for (int s : source) used = used || s == static_cast<int>(c);
        if (!used) {
            resp_col = static_cast<int>(c);
            break;
        }
    }

    std::vector<Dataset::Column> columns(static_cast<std::size_t>(schema.m()));
    for (int j = 0; j < schema.m(); ++j) {
        auto& col = columns[j];
        col.obs.assign(static_cast<std::size_t>(n), 0);
        if (schema.predictors[j].kind == PredictorKind::numeric)
            col.num.assign(static_cast<std::size_t>(n), 0.0);
        else
            col.cat.assign(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i) {
            const std::string& cell = table.rows[i][static_cast<std::size_t>(source[j])];
            if (missing_tokens.count(cell)) continue;
            if (schema.predictors[j].kind == PredictorKind::numeric) {
                double v;
                if (!parse_double(cell, v) || !std::isfinite(v))
                    throw Error(ErrorKind::schema, "unparseable numeric cell '" + cell + "' at row " +
                                                       std::to_string(i + 1) + ", predictor '" +
                                                       schema.predictors[j].name + "'");
                col.num[i] = v;
            } else {
                int code = schema.predictors[j].category_code(cell);
                if (code < 0)
                    throw Error(ErrorKind::schema, "unknown category '" + cell + "' at row " +
                                                       std::to_string(i + 1) + ", predictor '" +
                                                       schema.predictors[j].name + "'");
                col.cat[i] = code;
            }
            col.obs[i] = 1;
        }
    }

    std::vector<int> response;
    if (resp_col >= 0) {
        response.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const std::string& cell = table.rows[i][static_cast<std::size_t>(resp_col)];
            int code = schema.response_code(cell);
            if (code < 0)
                throw Error(ErrorKind::schema,
                            "unknown response label '" + cell + "' at row " + std::to_string(i + 1));
            response[i] = code;
        }
    }
    return Dataset::from_columns(schema, std::move(columns), std::move(response));
}

}  // namespace best
