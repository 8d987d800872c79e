#include "predilect/config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "predilect/errors.hpp"

namespace predilect {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects anything it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw FormatError("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw FormatError("config: '" + path_ + "." + key + "' has the wrong type");
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!known_.count(it.key())) throw FormatError("config: unknown key '" + path_ + "." + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

WorldConfig read_world(const json& j, const std::string& path) {
  WorldConfig c;
  Section s(j, path);
  s.read("num_classes", c.num_classes);
  s.read("n", c.n);
  s.read("d", c.d);
  s.read("seed", c.seed);
  s.read("noise", c.noise);
  s.read("oct_signal", c.oct_signal);
  s.read("fundus_signal", c.fundus_signal);
  s.read("prompt_bank_size", c.prompt_bank_size);
  s.read("mask_density", c.mask_density);
  s.read("site_keep", c.site_keep);
  s.finish();
  if (c.noise < 0.0) throw ContractError("config: world.noise must be >= 0");
  return c;
}

TrainConfig read_train(const json& j, const std::string& path) {
  TrainConfig c;
  Section s(j, path);
  std::string strategy(to_string(c.oct_strategy));
  s.read("epochs", c.epochs);
  s.read("warmup_epochs", c.warmup_epochs);
  s.read("learning_rate", c.learning_rate);
  s.read("batch_size", c.batch_size);
  s.read("samples_per_epoch", c.samples_per_epoch);
  s.read("seed", c.seed);
  s.read("tau", c.tau);
  s.read("lambda1", c.lambda1);
  s.read("lambda2", c.lambda2);
  s.read("oct_strategy", strategy);
  s.read("symmetric", c.symmetric);
  s.read("aux_loss", c.aux_loss);
  s.read("aux_weight", c.aux_weight);
  s.finish();
  c.oct_strategy = parse_oct_strategy(strategy);
  c.validate();
  return c;
}

}  // namespace

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"warmup_epochs", c.warmup_epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"samples_per_epoch", c.samples_per_epoch},
          {"seed", c.seed},
          {"tau", c.tau},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"oct_strategy", std::string(to_string(c.oct_strategy))},
          {"symmetric", c.symmetric},
          {"aux_loss", c.aux_loss},
          {"aux_weight", c.aux_weight}};
}

WorldConfig world_config_from_json(const nlohmann::json& j) { return read_world(j, "world"); }
TrainConfig train_config_from_json(const nlohmann::json& j) { return read_train(j, "train"); }

RunConfig parse_run_config(const nlohmann::json& doc) {
  RunConfig rc;
  if (!doc.is_object()) throw FormatError("config: top level must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (key == "world") {
      rc.world = read_world(*it, "world");
    } else if (key == "train") {
      rc.train = read_train(*it, "train");
    } else if (key == "eval") {
      Section s(*it, "eval");
      s.read("test_size", rc.eval.test_size);
      s.read("seeds", rc.eval.seeds);
      s.read("pool_size", rc.eval.pool_size);
      s.read("probe_steps", rc.eval.probe_steps);
      s.read("probe_lr", rc.eval.probe_lr);
      s.finish();
      if (rc.eval.seeds.empty()) throw ContractError("config: eval.seeds must not be empty");
      if (rc.eval.test_size < 2) throw ContractError("config: eval.test_size must be >= 2");
      if (rc.eval.pool_size < 1) throw ContractError("config: eval.pool_size must be >= 1");
    } else if (key == "verify") {
      Section s(*it, "verify");
      s.read("n", rc.verify.n);
      s.read("d", rc.verify.d);
      s.read("alpha", rc.verify.alpha);
      s.read("noise_levels", rc.verify.noise_levels);
      s.read("trials", rc.verify.trials);
      s.read("seed", rc.verify.seed);
      s.read("logit_std", rc.verify.logit_std);
      s.finish();
      rc.verify.validate();
    } else {
      throw FormatError("config: unknown key '" + key + "'");
    }
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("config: " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

}  // namespace predilect
