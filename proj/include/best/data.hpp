#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "best/util.hpp"

namespace best {

enum class PredictorKind : std::uint8_t { numeric, categorical };

struct Predictor {
    std::string name;
    PredictorKind kind = PredictorKind::numeric;
    std::vector<std::string> categories; // categorical only, order is canonical

    int category_code(std::string_view label) const {
        for (std::size_t c = 0; c < categories.size(); ++c)
            if (categories[c] == label) return static_cast<int>(c);
        return -1;
    }
};

// Predictor layout plus the response label set. Immutable once built.
struct Schema {
    std::vector<Predictor> predictors;
    std::vector<std::string> response_labels;

    int m() const { return static_cast<int>(predictors.size()); }
    int k() const { return static_cast<int>(response_labels.size()); }

    int index_of(std::string_view name) const {
        for (std::size_t j = 0; j < predictors.size(); ++j)
            if (predictors[j].name == name) return static_cast<int>(j);
        return -1;
    }

    int response_code(std::string_view label) const {
        for (std::size_t q = 0; q < response_labels.size(); ++q)
            if (response_labels[q] == label) return static_cast<int>(q);
        return -1;
    }

    void validate() const; // throws Error(schema) on violated invariants
    std::string fingerprint() const;
};

// Columnar dataset with a per-cell observed mask. Masked cells keep whatever
// value the storage holds but it is not readable through num()/cat(); split
// search and all downstream consumers must gate on observed().
class Dataset {
public:
    struct Column {
        std::vector<double> num;       // numeric storage
        std::vector<std::int32_t> cat; // categorical storage (codes)
        std::vector<std::uint8_t> obs; // observed flags, 1 = observed
    };

    Dataset() = default;

    static Dataset from_columns(Schema schema, std::vector<Column> columns,
                                std::vector<int> response, std::vector<double> weights = {});

    const Schema& schema() const { return schema_; }
    int n() const { return n_; }
    int m() const { return schema_.m(); }
    int k() const { return schema_.k(); }

    bool observed(int j, int i) const { return columns_[j].obs[i] != 0; }

    double num(int j, int i) const {
        assert(schema_.predictors[j].kind == PredictorKind::numeric);
        assert(observed(j, i) && "reading a masked cell");
        return columns_[j].num[i];
    }

    int cat(int j, int i) const {
        assert(schema_.predictors[j].kind == PredictorKind::categorical);
        assert(observed(j, i) && "reading a masked cell");
        return columns_[j].cat[i];
    }

    bool has_response() const { return !response_.empty(); }
    int response(int i) const { return response_[i]; }
    double weight(int i) const { return weights_[i]; }
    double total_weight() const;

    // Copy with a replacement mask for one predictor; values are retained in
    // storage but newly masked cells become unreadable.
    Dataset with_mask(int j, std::vector<std::uint8_t> mask) const;

    const Column& column(int j) const { return columns_[j]; }

private:
    Schema schema_;
    int n_ = 0;
    std::vector<Column> columns_;
    std::vector<int> response_;     // empty means no response attached
    std::vector<double> weights_;
};

// Parses raw text records into a Dataset. Each record holds one cell per
// predictor (schema order) followed by the response cell. Cells matching a
// missing token are masked out.
Dataset build_dataset(const std::vector<std::vector<std::string>>& rows, const Schema& schema,
                      const std::set<std::string>& missing_tokens);

// Name given to the derived missingness indicator of a predictor.
std::string missingness_name(const std::string& predictor_name);

// Appends a fully observed categorical predictor M(<name_j>) with categories
// {0,1}, value 1 exactly where predictor j is observed. Existing columns are
// untouched.
Dataset derive_missingness(const Dataset& ds, int j);

} // namespace best
