#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "predilect/engine.hpp"
#include "predilect/inference.hpp"
#include "predilect/model.hpp"
#include "predilect/world.hpp"

namespace predilect {

struct NamedTensor {
  std::string name;
  Matrix value;
};

// On-disk layout: one line holding a compact JSON header, then the tensor
// payloads as little-endian IEEE-754 doubles in directory order.
//
//   {"format":"predilect-checkpoint","format_version":1,"hyperparameters":{...},
//    "rng_seed":N,"n":N,"d":N,"vocabulary":[...],"classes":[{"name":..,"abbr":..}],
//    "tensors":[{"name":..,"shape":[r,c],"offset":bytes}]}\n
//   <payload bytes>
//
// Offsets are relative to the first payload byte.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  TrainConfig train;
  WorldConfig world;
  std::uint64_t rng_seed = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::string> vocabulary;
  std::vector<ClassLabel> classes;  // training classes
  std::vector<NamedTensor> tensors;

  static Checkpoint from_model(const Model& model, const World& world, const TrainConfig& train);
  // Throws FormatError when a tensor is missing, duplicated or mis-shaped.
  Model to_model() const;

  std::string serialize() const;
  static Checkpoint parse(std::string_view bytes);  // throws FormatError

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

// FNV-1a over every parameter name and value.
std::uint64_t checksum(const Model& model);

}  // namespace predilect
