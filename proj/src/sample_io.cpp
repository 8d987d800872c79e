#include "predilect/sample_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include "predilect/errors.hpp"
#include "predilect/metrics.hpp"

namespace predilect {

using nlohmann::json;

namespace {

std::string field_string(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(where + "." + key + ": missing");
  if (!it->is_string()) throw FormatError(where + "." + key + ": expected a string");
  std::string value = it->get<std::string>();
  if (value.find_first_of(",\"\r\n") != std::string::npos) {
    throw FormatError(where + "." + key + ": must not contain commas, quotes or line breaks");
  }
  return value;
}

Matrix parse_grid(const json& j, std::size_t n, std::size_t d, const std::string& where) {
  if (!j.is_array() || j.size() != n) {
    throw FormatError(where + ": expected " + std::to_string(n) + " rows");
  }
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row_where = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != d) {
      throw FormatError(row_where + ": expected " + std::to_string(d) + " numbers");
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (!j[i][k].is_number()) throw FormatError(row_where + "[" + std::to_string(k) + "]: expected a number");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

}  // namespace

std::vector<ClassLabel> parse_classes(const json& doc) {
  const json& list = doc.is_object() && doc.contains("classes") ? doc.at("classes") : doc;
  if (!list.is_array() || list.empty()) throw FormatError("classes: expected a non-empty list");
  std::vector<ClassLabel> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "classes[" + std::to_string(i) + "]";
    if (!list[i].is_object()) throw FormatError(where + ": expected an object");
    for (const auto& [key, _] : list[i].items()) {
      if (key != "name" && key != "abbr") throw FormatError(where + ": unknown key '" + key + "'");
    }
    ClassLabel label{field_string(list[i], "name", where), field_string(list[i], "abbr", where)};
    if (label.name.empty()) throw FormatError(where + ".name: empty");
    if (!seen.insert(label.name).second) throw FormatError(where + ".name: duplicate '" + label.name + "'");
    out.push_back(std::move(label));
  }
  return out;
}

std::vector<LabeledFundus> parse_samples(const json& doc, std::size_t n, std::size_t d,
                                         const std::vector<ClassLabel>& classes) {
  const json& list = doc.is_object() && doc.contains("samples") ? doc.at("samples") : doc;
  if (!list.is_array()) throw FormatError("samples: expected a list");
  std::vector<LabeledFundus> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "samples[" + std::to_string(i) + "]";
    const json& entry = list[i];
    LabeledFundus s;
    s.id = std::to_string(i);
    if (entry.is_array()) {
      s.fundus = parse_grid(entry, n, d, where);
    } else if (entry.is_object()) {
      for (const auto& [key, _] : entry.items()) {
        if (key != "id" && key != "fundus" && key != "label") {
          throw FormatError(where + ": unknown key '" + key + "'");
        }
      }
      if (entry.contains("id")) s.id = field_string(entry, "id", where);
      if (!entry.contains("fundus")) throw FormatError(where + ".fundus: missing");
      s.fundus = parse_grid(entry.at("fundus"), n, d, where + ".fundus");
      if (entry.contains("label")) {
        const std::string name = field_string(entry, "label", where);
        const auto it = std::find_if(classes.begin(), classes.end(),
                                     [&](const ClassLabel& c) { return c.name == name; });
        if (it == classes.end()) throw FormatError(where + ".label: unknown class '" + name + "'");
        s.label = static_cast<int>(it - classes.begin());
      }
    } else {
      throw FormatError(where + ": expected an array or an object");
    }
    out.push_back(std::move(s));
  }
  return out;
}

json read_json_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw FormatError(what + ": cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(what + ": " + path.string() + ": " + e.what());
  }
}

ClassifySummary summarize(const std::vector<Prediction>& predictions, const std::vector<int>& truth,
                          std::size_t num_classes) {
  if (predictions.size() != truth.size()) throw ShapeError("summarize: predictions and labels differ in length");
  ClassifySummary s;
  s.labeled = truth.size();
  if (truth.empty()) return s;
  std::vector<std::vector<double>> scores;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predictions[i].class_id == truth[i]) ++correct;
    scores.push_back(predictions[i].scores);
  }
  s.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  std::vector<ScoredSet> usable;
  for (ScoredSet& set : one_vs_rest(scores, truth, static_cast<int>(num_classes))) {
    const auto pos = std::count(set.labels.begin(), set.labels.end(), 1);
    if (pos > 0 && static_cast<std::size_t>(pos) < set.labels.size()) usable.push_back(std::move(set));
  }
  if (usable.empty()) {
    s.macro_auroc = s.macro_auprc = std::numeric_limits<double>::quiet_NaN();
  } else {
    s.macro_auroc = macro_over_classes(usable, [](const ScoredSet& x) { return auroc(x); });
    s.macro_auprc = macro_over_classes(usable, [](const ScoredSet& x) { return auprc(x); });
  }
  return s;
}

}  // namespace predilect
