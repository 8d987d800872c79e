#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "predilect/inference.hpp"

namespace predilect {

// Class file: [{"name": "...", "abbr": "..."}, ...] or {"classes": [...]}.
// Names must be unique and non-empty.
std::vector<ClassLabel> parse_classes(const nlohmann::json& doc);

struct LabeledFundus {
  std::string id;
  Matrix fundus;             // n x d
  std::optional<int> label;  // index into the class list
};

// Samples file: a list whose entries are either a bare n x d array or an
// object {"id": str?, "fundus": n x d array, "label": class name?}.
// Errors name the offending field, e.g. "samples[2].fundus[1][3]".
std::vector<LabeledFundus> parse_samples(const nlohmann::json& doc, std::size_t n, std::size_t d,
                                         const std::vector<ClassLabel>& classes);

// Reads a JSON file; parse errors carry the line and column.
nlohmann::json read_json_file(const std::filesystem::path& path, const std::string& what);

struct ClassifySummary {
  std::size_t labeled = 0;
  double accuracy = 0.0;
  // Averaged over classes that have both positive and negative samples;
  // NaN when no class qualifies.
  double macro_auroc = 0.0;
  double macro_auprc = 0.0;
};
ClassifySummary summarize(const std::vector<Prediction>& predictions, const std::vector<int>& truth,
                          std::size_t num_classes);

}  // namespace predilect
