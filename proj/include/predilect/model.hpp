#pragma once

#include <cstdint>
#include <vector>

#include "predilect/attention.hpp"
#include "predilect/encoders.hpp"
#include "predilect/objectives.hpp"
#include "predilect/world.hpp"

namespace predilect {

// Every trainable tensor of the pipeline.
struct Model {
  std::size_t n = 0;
  std::size_t d = 0;
  Encoder fundus;
  Encoder oct;
  TextVocabulary text;
  PredilectionMatrix predilection;
  AttentionHead head;

  // Deterministic initialisation; the text vocabulary is built from the
  // world's prompt banks.
  static Model init(const World& world, std::uint64_t seed);

  // Stable order, also the checkpoint tensor order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();
};

struct LossConfig {
  LossWeights weights;
  // Weight of the optional fundus <-> refined-cue term; 0 disables it.
  double aux_weight = 0.0;
};

struct PipelineVars {
  Var loss;
  BatchEmbeddings pooled;
  Var refined;  // pooled F_OT rows; only set when aux_weight > 0
};

// encode all three modalities -> gate -> pool -> weighted contrastive loss.
PipelineVars pipeline_forward(Tape& tape, Model& model, const TripletBatch& batch, const LossConfig& cfg);
double pipeline_loss(const Model& model, const TripletBatch& batch, const LossConfig& cfg);

// Pooled fundus embedding (1 x d) with frozen parameters.
Matrix pooled_fundus(const Model& model, const Matrix& fundus_raw);

// Largest tensor-level relative error between backward() and central finite
// differences over every parameter of the model.
struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;
};
struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
};
GradCheckReport check_pipeline_gradients(const Model& model, const TripletBatch& batch, const LossConfig& cfg,
                                         double step = 1e-4, BackwardFault fault = BackwardFault::kNone);

}  // namespace predilect
