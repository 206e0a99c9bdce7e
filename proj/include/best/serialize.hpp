#pragma once

#include <string>

#include "best/forest.hpp"
#include "best/missing.hpp"
#include "best/tree.hpp"

namespace best {

inline constexpr const char* kModelMarker = "bestfmt=1";

// Everything needed to score new data: the raw-input schema for CSV reading,
// the post-transform schema the tree splits on, the captured transform state,
// the compiled availability policy, and the fitted tree or forest.
struct Model {
    bool is_forest = false;
    Schema input_schema;
    Schema model_schema;
    TransformState state;
    AvailabilityPolicy policy;
    Tree tree;
    Forest forest;
};

std::string model_to_text(const Model& model);
Model model_from_text(const std::string& text, const std::string& origin);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace best
