#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "predilect/engine.hpp"
#include "predilect/rank_verifier.hpp"
#include "predilect/world.hpp"

namespace predilect {

struct EvalConfig {
  int test_size = 200;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int pool_size = 64;
  int probe_steps = 200;
  double probe_lr = 0.5;
};

// One JSON document with optional sections world / train / eval / verify.
// Every section and key is optional; unknown keys are rejected.
struct RunConfig {
  WorldConfig world;
  TrainConfig train;
  EvalConfig eval;
  NoiseSweepConfig verify;
};

// Throw FormatError naming the offending key on unknown keys or wrong types,
// and ContractError on values that fail validation.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const TrainConfig& c);
WorldConfig world_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace predilect
