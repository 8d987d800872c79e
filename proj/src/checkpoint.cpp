#include "predilect/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include "predilect/config.hpp"
#include "predilect/errors.hpp"

namespace predilect {

namespace {

constexpr std::string_view kFormatName = "predilect-checkpoint";

void put_le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

Checkpoint Checkpoint::from_model(const Model& model, const World& world, const TrainConfig& train) {
  Checkpoint ck;
  ck.train = train;
  ck.world = world.config;
  ck.rng_seed = train.seed;
  ck.n = model.n;
  ck.d = model.d;
  ck.vocabulary = model.text.tokens();
  for (const auto& spec : world.classes) ck.classes.push_back({spec.name, spec.abbr});
  for (const Parameter* p : model.parameters()) ck.tensors.push_back({p->name, p->value});
  return ck;
}

Model Checkpoint::to_model() const {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& t : tensors) {
    if (!by_name.emplace(t.name, &t.value).second) throw FormatError("checkpoint: duplicate tensor '" + t.name + "'");
  }
  auto take = [&](const std::string& name, std::size_t rows, std::size_t cols) -> const Matrix& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint: missing tensor '" + name + "'");
    if (it->second->rows() != rows || it->second->cols() != cols) {
      throw FormatError("checkpoint: tensor '" + name + "' has shape " + it->second->shape_string() +
                        ", expected (" + std::to_string(rows) + "x" + std::to_string(cols) + ")");
    }
    return *it->second;
  };

  Model m;
  m.n = n;
  m.d = d;
  m.fundus.modality = Modality::kFundus;
  m.oct.modality = Modality::kOct;
  m.fundus.weight = Parameter("fundus_encoder.weight", take("fundus_encoder.weight", d, d));
  m.fundus.bias = Parameter("fundus_encoder.bias", take("fundus_encoder.bias", 1, d));
  m.oct.weight = Parameter("oct_encoder.weight", take("oct_encoder.weight", d, d));
  m.oct.bias = Parameter("oct_encoder.bias", take("oct_encoder.bias", 1, d));
  m.text = TextVocabulary::restore(vocabulary, take("text_encoder.embedding", vocabulary.size(), d));
  m.predilection.logits = Parameter("predilection.logits", take("predilection.logits", n, d));
  m.head.w_q = Parameter("attention.w_q", take("attention.w_q", d, d));
  m.head.w_k = Parameter("attention.w_k", take("attention.w_k", d, d));
  m.head.w_v = Parameter("attention.w_v", take("attention.w_v", d, d));
  if (by_name.size() != m.parameters().size()) throw FormatError("checkpoint: unexpected extra tensors");
  return m;
}

std::string Checkpoint::serialize() const {
  nlohmann::json header;
  header["format"] = kFormatName;
  header["format_version"] = format_version;
  header["hyperparameters"] = {{"train", to_json(train)}, {"world", to_json(world)}};
  header["rng_seed"] = rng_seed;
  header["n"] = n;
  header["d"] = d;
  header["vocabulary"] = vocabulary;
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : classes) cls.push_back({{"name", c.name}, {"abbr", c.abbr}});
  header["classes"] = cls;
  nlohmann::json dir = nlohmann::json::array();
  std::string payload;
  for (const auto& t : tensors) {
    dir.push_back({{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}, {"offset", payload.size()}});
    for (double v : t.value.data()) put_le(payload, v);
  }
  header["tensors"] = dir;
  std::string out = header.dump();
  out.push_back('\n');
  out += payload;
  return out;
}

Checkpoint Checkpoint::parse(std::string_view bytes) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw FormatError("checkpoint: missing header line");
  const std::string_view payload = bytes.substr(eol + 1);
  try {
    const auto header = nlohmann::json::parse(bytes.substr(0, eol));
    if (header.at("format").get<std::string>() != kFormatName) throw FormatError("checkpoint: not a checkpoint file");
    Checkpoint ck;
    ck.format_version = header.at("format_version").get<int>();
    if (ck.format_version != kFormatVersion) {
      throw FormatError("checkpoint: unsupported format_version " + std::to_string(ck.format_version));
    }
    ck.train = train_config_from_json(header.at("hyperparameters").at("train"));
    ck.world = world_config_from_json(header.at("hyperparameters").at("world"));
    ck.rng_seed = header.at("rng_seed").get<std::uint64_t>();
    ck.n = header.at("n").get<std::size_t>();
    ck.d = header.at("d").get<std::size_t>();
    ck.vocabulary = header.at("vocabulary").get<std::vector<std::string>>();
    for (const auto& c : header.at("classes")) {
      ck.classes.push_back({c.at("name").get<std::string>(), c.at("abbr").get<std::string>()});
    }
    std::size_t expected_offset = 0;
    for (const auto& t : header.at("tensors")) {
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw FormatError("checkpoint: tensor shape must have two dimensions");
      const auto offset = t.at("offset").get<std::size_t>();
      if (offset != expected_offset) throw FormatError("checkpoint: tensor payloads are not contiguous");
      const std::size_t count = shape[0] * shape[1];
      if (offset + 8 * count > payload.size()) throw FormatError("checkpoint: payload truncated");
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) values[i] = get_le(payload.data() + offset + 8 * i);
      ck.tensors.push_back({t.at("name").get<std::string>(), Matrix(shape[0], shape[1], std::move(values))});
      expected_offset = offset + 8 * count;
    }
    if (expected_offset != payload.size()) throw FormatError("checkpoint: trailing bytes after payload");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: invalid hyperparameters: ") + e.what());
  }
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("error writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

std::uint64_t checksum(const Model& model) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (const Parameter* p : model.parameters()) {
    for (char c : p->name) mix(static_cast<unsigned char>(c));
    for (double v : p->value.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(bits >> (8 * i)));
    }
  }
  return h;
}

}  // namespace predilect
