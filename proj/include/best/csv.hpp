#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "best/data.hpp"

namespace best {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// RFC-4180-style: quoted fields, doubled quotes, CRLF tolerated
CsvTable parse_csv(const std::string& text, const std::string& origin);
CsvTable read_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Lines of "<column> <numeric|categorical>"; # starts a comment.
std::map<std::string, PredictorKind> parse_types_file(const std::string& text,
                                                      const std::string& origin);

struct CsvOptions {
    std::set<std::string> missing_tokens = {"", "NA"};
    std::string response;  // header name; empty means the last column
    bool require_response = true;
    std::map<std::string, PredictorKind> type_overrides;
};

// Columns with every non-missing cell parseable as a number become numeric,
// the rest categorical with lexicographically sorted observed levels.
Schema infer_schema(const CsvTable& table, const CsvOptions& opt, int* response_col,
                    Diagnostics* diag = nullptr);

Dataset dataset_from_csv(const CsvTable& table, const CsvOptions& opt, Diagnostics* diag = nullptr);

// Reorders and selects table columns to match an existing schema by header
// name; the response column is attached when present in the table.
Dataset dataset_for_schema(const CsvTable& table, const Schema& schema,
                           const std::set<std::string>& missing_tokens);

}  // namespace best
