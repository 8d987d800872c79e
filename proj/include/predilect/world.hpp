#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "predilect/matrix.hpp"
#include "predilect/random.hpp"

namespace predilect {

// Generator knobs for the synthetic fundus/OCT/text world.
struct WorldConfig {
  int num_classes = 4;
  int n = 4;
  int d = 16;
  std::uint64_t seed = 1;
  double noise = 0.5;           // std of the i.i.d. Gaussian added to both image modalities
  double oct_signal = 1.0;      // planted amplitude, raised to 4*noise/site_keep if lower
  double fundus_signal = 1.0;   // RMS of the class fundus pattern
  int prompt_bank_size = 4;
  double mask_density = 0.25;   // expected fraction of active sites per class
  double site_keep = 1.0;       // chance that a given site shows up in one OCT scan
};

struct DiseaseSpec {
  int class_id = 0;
  std::string name;
  std::string abbr;
  Matrix site_mask;       // n x d, entries in {0, 1}
  std::vector<std::string> prompt_bank;
  Matrix fundus_pattern;  // n x d, unit RMS; derived from the mask through the world's fundus map
};

struct World {
  WorldConfig config;
  Matrix fundus_map;  // (n*d) x (n*d) random linear map from mask to fundus pattern
  std::vector<DiseaseSpec> classes;

  std::size_t n() const { return static_cast<std::size_t>(config.n); }
  std::size_t d() const { return static_cast<std::size_t>(config.d); }
};

struct Sample {
  Matrix fundus_raw;
  Matrix oct_raw;
  std::string prompt;
  int class_id = 0;
};

struct TripletBatch {
  std::vector<Sample> samples;
};

inline constexpr std::string_view kPrimaryTemplate = "This retina fundus image shows {NAME}, {ABBR}";
const std::vector<std::string>& prompt_templates();

// Substitutes every {NAME} and {ABBR}. Throws TemplateError if either is absent.
std::string render_prompt(std::string_view tmpl, std::string_view name, std::string_view abbr);

World make_world(const WorldConfig& config);
World make_world(int num_classes, int n, int d, std::uint64_t seed);

// A class that is not part of the generated vocabulary, e.g. a held-out
// disease. Shares the world's fundus map so the mask drives its appearance.
DiseaseSpec make_disease(const World& world, int class_id, std::string name, std::string abbr,
                         Matrix site_mask);

Sample make_sample(const World& world, const DiseaseSpec& spec, double noise, Rng& rng);

// Class-balanced batch: each class appears floor(batch/C) times, the remainder
// classes are drawn without replacement. Fundus and OCT are drawn independently.
TripletBatch sample_batch(const World& world, int batch, double noise, std::uint64_t seed);

// Samples drawn from an explicit list of classes, balanced the same way.
TripletBatch sample_from(const World& world, const std::vector<DiseaseSpec>& classes, int count,
                         double noise, std::uint64_t seed);

// Mean |value| on the mask divided by mean |value| off the mask (infinity when
// the off-mask part is exactly zero or empty).
double mask_contrast(const Matrix& oct_raw, const Matrix& site_mask);

nlohmann::json to_json(const WorldConfig& c);
nlohmann::json world_to_json(const World& world);
// Regenerates the world from the stored generator arguments and checks that
// the stored class table matches. Throws FormatError otherwise.
World world_from_json(const nlohmann::json& doc);

}  // namespace predilect
