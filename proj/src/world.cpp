#include "predilect/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "predilect/errors.hpp"

namespace predilect {

namespace {

constexpr std::uint64_t kWorldStream = 0x776f726c64;  // "world"
constexpr std::uint64_t kBatchStream = 0x6261746368;  // "batch"

const std::vector<std::string> kGreek = {
    "Alpha", "Beta",  "Gamma",   "Delta", "Epsilon", "Zeta",  "Eta",     "Theta",
    "Iota",  "Kappa", "Lambda",  "Mu",    "Nu",      "Xi",    "Omicron", "Pi",
    "Rho",   "Sigma", "Tau",     "Upsilon", "Phi",   "Chi",   "Psi",     "Omega"};
const std::vector<std::string> kSuffix = {"Retinopathy", "Maculopathy", "Choroidopathy", "Neuropathy"};

std::pair<std::string, std::string> class_name(int i) {
  const std::size_t g = static_cast<std::size_t>(i) % kGreek.size();
  const std::size_t round = static_cast<std::size_t>(i) / kGreek.size();
  const std::size_t s = (static_cast<std::size_t>(i) + round) % kSuffix.size();
  std::string name = kGreek[g] + " " + kSuffix[s];
  std::string abbr = std::string(1, kGreek[g][0]) + std::string(1, kSuffix[s][0]);
  if (round >= kSuffix.size()) {
    name += " " + std::to_string(round);
    abbr += std::to_string(round);
  }
  return {name, abbr};
}

Matrix random_mask(std::size_t n, std::size_t d, double density, Rng& rng) {
  std::bernoulli_distribution on(density);
  Matrix m(n, d);
  for (double& v : m.data()) v = on(rng) ? 1.0 : 0.0;
  if (max_abs(m) == 0.0) {
    std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
    m.data()[pick(rng)] = 1.0;
  }
  return m;
}

Matrix mask_from_code(std::size_t n, std::size_t d, std::uint64_t code) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = ((code >> i) & 1u) ? 1.0 : 0.0;
  return m;
}

Matrix fundus_pattern_for(const World& world, const Matrix& mask) {
  const Matrix flat(mask.size(), 1, std::vector<double>(mask.data().begin(), mask.data().end()));
  Matrix projected = matmul(world.fundus_map, flat);
  double ss = 0.0;
  for (double v : projected.data()) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(projected.size()));
  Matrix pattern(mask.rows(), mask.cols(),
                 std::vector<double>(projected.data().begin(), projected.data().end()));
  return rms > 0.0 ? scale(pattern, 1.0 / rms) : pattern;
}

std::vector<int> balanced_classes(int count, int num_classes, Rng& rng) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < (count / num_classes) * num_classes; ++i) out.push_back(i % num_classes);
  std::vector<int> rest(static_cast<std::size_t>(num_classes));
  std::iota(rest.begin(), rest.end(), 0);
  std::shuffle(rest.begin(), rest.end(), rng);
  for (int i = 0; i < count % num_classes; ++i) out.push_back(rest[static_cast<std::size_t>(i)]);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace

const std::vector<std::string>& prompt_templates() {
  static const std::vector<std::string> templates = {
      std::string(kPrimaryTemplate),
      "A fundus photograph with signs of {NAME} ({ABBR})",
      "Retinal findings consistent with {NAME}, abbreviated {ABBR}",
      "{ABBR} lesions typical of {NAME} are visible in this retina",
      "Color fundus image of an eye affected by {NAME} ({ABBR})",
      "The retina shows features of {ABBR}, also called {NAME}",
  };
  return templates;
}

std::string render_prompt(std::string_view tmpl, std::string_view name, std::string_view abbr) {
  constexpr std::string_view kName = "{NAME}";
  constexpr std::string_view kAbbr = "{ABBR}";
  if (tmpl.find(kName) == std::string_view::npos || tmpl.find(kAbbr) == std::string_view::npos) {
    throw TemplateError("template must contain both {NAME} and {ABBR}: \"" + std::string(tmpl) + "\"");
  }
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.substr(i, kName.size()) == kName) {
      out += name;
      i += kName.size();
    } else if (tmpl.substr(i, kAbbr.size()) == kAbbr) {
      out += abbr;
      i += kAbbr.size();
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

World make_world(const WorldConfig& config) {
  if (config.num_classes < 2) throw ContractError("make_world: num_classes must be >= 2");
  if (config.n < 1) throw ContractError("make_world: n must be >= 1");
  if (config.d < 2) throw ContractError("make_world: d must be >= 2");
  if (config.prompt_bank_size < 3 ||
      config.prompt_bank_size > static_cast<int>(prompt_templates().size())) {
    throw ContractError("make_world: prompt_bank_size must be in [3, " +
                        std::to_string(prompt_templates().size()) + "]");
  }
  if (!(config.mask_density > 0.0 && config.mask_density <= 1.0)) {
    throw ContractError("make_world: mask_density must be in (0, 1]");
  }
  if (!(config.site_keep > 0.0 && config.site_keep <= 1.0)) {
    throw ContractError("make_world: site_keep must be in (0, 1]");
  }
  const std::size_t n = static_cast<std::size_t>(config.n);
  const std::size_t d = static_cast<std::size_t>(config.d);
  const std::size_t cells = n * d;
  // Masks must be nonzero and pairwise distinct: at most 2^(n*d) - 1 classes.
  if (cells < 63) {
    const std::uint64_t capacity = (std::uint64_t{1} << cells) - 1;
    if (static_cast<std::uint64_t>(config.num_classes) > capacity) {
      throw CapacityError("make_world: " + std::to_string(config.num_classes) +
                          " classes cannot have distinct nonzero masks on a " + std::to_string(n) +
                          "x" + std::to_string(d) + " grid");
    }
  }

  Rng rng = make_rng(config.seed, {kWorldStream});
  World world;
  world.config = config;
  world.fundus_map = gaussian_matrix(cells, cells, 1.0 / std::sqrt(static_cast<double>(cells)), rng);

  std::vector<Matrix> masks;
  if (cells <= 12) {
    std::vector<std::uint64_t> codes((std::uint64_t{1} << cells) - 1);
    std::iota(codes.begin(), codes.end(), std::uint64_t{1});
    std::shuffle(codes.begin(), codes.end(), rng);
    for (int c = 0; c < config.num_classes; ++c) masks.push_back(mask_from_code(n, d, codes[static_cast<std::size_t>(c)]));
  } else {
    std::set<std::vector<double>> seen;
    int attempts = 0;
    while (masks.size() < static_cast<std::size_t>(config.num_classes)) {
      if (++attempts > 1000 * config.num_classes) {
        throw CapacityError("make_world: could not draw distinct masks at density " +
                            std::to_string(config.mask_density));
      }
      Matrix m = random_mask(n, d, config.mask_density, rng);
      std::vector<double> key(m.data().begin(), m.data().end());
      if (seen.insert(key).second) masks.push_back(std::move(m));
    }
  }

  for (int c = 0; c < config.num_classes; ++c) {
    auto [name, abbr] = class_name(c);
    world.classes.push_back(make_disease(world, c, name, abbr, masks[static_cast<std::size_t>(c)]));
  }
  return world;
}

World make_world(int num_classes, int n, int d, std::uint64_t seed) {
  WorldConfig cfg;
  cfg.num_classes = num_classes;
  cfg.n = n;
  cfg.d = d;
  cfg.seed = seed;
  return make_world(cfg);
}

DiseaseSpec make_disease(const World& world, int class_id, std::string name, std::string abbr,
                         Matrix site_mask) {
  if (site_mask.rows() != world.n() || site_mask.cols() != world.d()) {
    throw ShapeError("make_disease: mask " + site_mask.shape_string() + " does not fit the world grid");
  }
  if (max_abs(site_mask) == 0.0) throw ContractError("make_disease: mask has no active site");
  DiseaseSpec spec;
  spec.class_id = class_id;
  spec.name = std::move(name);
  spec.abbr = std::move(abbr);
  spec.site_mask = std::move(site_mask);
  const auto& templates = prompt_templates();
  for (int i = 0; i < world.config.prompt_bank_size; ++i) {
    spec.prompt_bank.push_back(render_prompt(templates[static_cast<std::size_t>(i)], spec.name, spec.abbr));
  }
  spec.fundus_pattern = fundus_pattern_for(world, spec.site_mask);
  return spec;
}

double mask_contrast(const Matrix& oct_raw, const Matrix& site_mask) {
  double on = 0.0, off = 0.0;
  std::size_t n_on = 0, n_off = 0;
  for (std::size_t i = 0; i < oct_raw.size(); ++i) {
    if (site_mask.data()[i] != 0.0) {
      on += std::abs(oct_raw.data()[i]);
      ++n_on;
    } else {
      off += std::abs(oct_raw.data()[i]);
      ++n_off;
    }
  }
  if (n_off == 0 || off == 0.0) return std::numeric_limits<double>::infinity();
  if (n_on == 0) return 0.0;
  return (on / static_cast<double>(n_on)) / (off / static_cast<double>(n_off));
}

Sample make_sample(const World& world, const DiseaseSpec& spec, double noise, Rng& rng) {
  if (noise < 0.0) throw ContractError("make_sample: noise must be >= 0");
  Sample s;
  s.class_id = spec.class_id;
  s.fundus_raw = add(scale(spec.fundus_pattern, world.config.fundus_signal),
                     gaussian_matrix(world.n(), world.d(), noise, rng));

  const double signal = std::max(world.config.oct_signal, 4.0 * noise / world.config.site_keep);
  Matrix planted = scale(spec.site_mask, signal);
  if (world.config.site_keep < 1.0) {
    std::bernoulli_distribution keep(world.config.site_keep);
    do {
      for (std::size_t i = 0; i < planted.rows(); ++i) {
        for (std::size_t j = 0; j < planted.cols(); ++j) {
          planted(i, j) = spec.site_mask(i, j) != 0.0 && keep(rng) ? signal : 0.0;
        }
      }
    } while (max_abs(planted) == 0.0);
  }
  // Redraw the rare noise realisations that would break the 2x contrast invariant.
  for (int attempt = 0;; ++attempt) {
    s.oct_raw = add(planted, gaussian_matrix(world.n(), world.d(), noise, rng));
    if (mask_contrast(s.oct_raw, spec.site_mask) >= 2.0) break;
    if (attempt == 256) throw ContractError("make_sample: could not satisfy the OCT contrast invariant");
  }

  std::uniform_int_distribution<std::size_t> pick(0, spec.prompt_bank.size() - 1);
  s.prompt = spec.prompt_bank[pick(rng)];
  return s;
}

TripletBatch sample_from(const World& world, const std::vector<DiseaseSpec>& classes, int count,
                         double noise, std::uint64_t seed) {
  if (classes.empty()) throw ContractError("sample_batch: empty world");
  if (count < 1) throw ContractError("sample_batch: count must be >= 1");
  if (noise < 0.0) throw ContractError("sample_batch: noise must be >= 0");
  Rng rng = make_rng(seed, {kBatchStream});
  TripletBatch batch;
  for (int c : balanced_classes(count, static_cast<int>(classes.size()), rng)) {
    batch.samples.push_back(make_sample(world, classes[static_cast<std::size_t>(c)], noise, rng));
  }
  return batch;
}

TripletBatch sample_batch(const World& world, int batch, double noise, std::uint64_t seed) {
  if (batch < 2) throw ContractError("sample_batch: batch must be >= 2");
  return sample_from(world, world.classes, batch, noise, seed);
}

nlohmann::json to_json(const WorldConfig& c) {
  return {{"num_classes", c.num_classes}, {"n", c.n},
          {"d", c.d},                     {"seed", c.seed},
          {"noise", c.noise},             {"oct_signal", c.oct_signal},
          {"fundus_signal", c.fundus_signal}, {"prompt_bank_size", c.prompt_bank_size},
          {"mask_density", c.mask_density}, {"site_keep", c.site_keep}};
}

nlohmann::json world_to_json(const World& world) {
  nlohmann::json doc;
  doc["generator"] = to_json(world.config);
  nlohmann::json classes = nlohmann::json::array();
  for (const DiseaseSpec& spec : world.classes) {
    nlohmann::json mask = nlohmann::json::array();
    for (std::size_t i = 0; i < spec.site_mask.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (double v : spec.site_mask.row(i)) row.push_back(static_cast<int>(v));
      mask.push_back(row);
    }
    classes.push_back({{"class_id", spec.class_id},
                       {"name", spec.name},
                       {"abbr", spec.abbr},
                       {"site_mask", mask},
                       {"prompt_bank", spec.prompt_bank}});
  }
  doc["classes"] = classes;
  return doc;
}

World world_from_json(const nlohmann::json& doc) {
  try {
    const auto& g = doc.at("generator");
    WorldConfig c;
    c.num_classes = g.at("num_classes").get<int>();
    c.n = g.at("n").get<int>();
    c.d = g.at("d").get<int>();
    c.seed = g.at("seed").get<std::uint64_t>();
    c.noise = g.at("noise").get<double>();
    c.oct_signal = g.at("oct_signal").get<double>();
    c.fundus_signal = g.at("fundus_signal").get<double>();
    c.prompt_bank_size = g.at("prompt_bank_size").get<int>();
    c.mask_density = g.at("mask_density").get<double>();
    c.site_keep = g.value("site_keep", 1.0);
    World world = make_world(c);
    if (world_to_json(world)["classes"] != doc.at("classes")) {
      throw FormatError("world document's class table does not match its generator arguments");
    }
    return world;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("world document: ") + e.what());
  }
}

}  // namespace predilect
