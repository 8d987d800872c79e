#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "predilect/inference.hpp"
#include "predilect/model.hpp"

namespace predilect {

// How the OCT side is filled in once paired OCT images are gone.
enum class OctStrategy { kRandomSelection, kAverageLatent, kLatentP };
std::string_view to_string(OctStrategy s);
OctStrategy parse_oct_strategy(std::string_view name);  // throws FormatError
inline constexpr OctStrategy kAllStrategies[] = {OctStrategy::kRandomSelection, OctStrategy::kAverageLatent,
                                                 OctStrategy::kLatentP};

struct TrainConfig {
  int epochs = 60;
  int warmup_epochs = 10;
  double learning_rate = 1e-2;
  int batch_size = 8;
  int samples_per_epoch = 64;
  std::uint64_t seed = 1;
  double tau = 0.07;
  double lambda1 = 0.4;
  double lambda2 = 0.6;
  OctStrategy oct_strategy = OctStrategy::kLatentP;
  bool symmetric = false;
  bool aux_loss = false;
  double aux_weight = 0.5;

  // Throws ContractError on an invalid combination.
  void validate() const;
  LossConfig loss() const;
  int steps_per_epoch() const;
};

struct TrainResult {
  Model model;
  std::vector<double> epoch_loss;  // mean loss of each epoch
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// The training set is a fixed list of class-balanced batches drawn once from
// the world; each epoch visits all of them in a fresh order and applies one
// SGD step per batch with a linearly warmed-up learning rate. Throws
// TrainingDivergedError if the loss or a parameter becomes non-finite.
TrainResult train(const World& world, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// p <- p - lr * g. Throws ShapeError on mismatched shapes.
void sgd_step(Matrix& param, const Matrix& grad, double lr);
void sgd_step(std::span<Parameter* const> params, double lr);

// base_lr * min(1, step / total_warmup_steps); base_lr when there is no warmup.
double warmup_lr(std::size_t step, std::size_t total_warmup_steps, double base_lr);

// Linear classifier on pooled fundus embeddings.
struct ProbeHead {
  Parameter weight;  // d x C
  Parameter bias;    // 1 x C

  Matrix logits(const Matrix& features) const;  // B x C
  std::vector<int> predict(const Matrix& features) const;
  int num_classes() const { return static_cast<int>(weight.value.cols()); }
};

struct ProbeConfig {
  int steps = 200;
  double learning_rate = 0.5;
};

// Full-batch softmax cross-entropy on fixed features (B x d).
ProbeHead train_probe(const Matrix& features, const std::vector<int>& labels, int num_classes,
                      const ProbeConfig& cfg);

// Linear probing: the model is taken by const reference, so encoders, P and
// the attention head cannot change. Throws ContractError on labels outside [0, C).
ProbeHead fine_tune_probe(const Model& model, const std::vector<Matrix>& fundus, const std::vector<int>& labels,
                          int num_classes, const ProbeConfig& cfg);

struct SubstituteOptions {
  int pool_size = 64;
  std::uint64_t seed = 1;
  double noise = 0.5;
};

// RandomSelection: one encoded OCT sample drawn from a class pool.
// AverageLatent: mean encoded OCT embedding over the class pool.
// LatentP: sigmoid(P), the same for every class.
Matrix oct_substitute(OctStrategy strategy, const World& world, const Model& model, int class_id,
                      const SubstituteOptions& opts);

// Per-class 1 x d template each strategy scores fundus embeddings against.
// RandomSelection / AverageLatent pool the gated substitute; LatentP uses the
// text-refined prototypes built with sigmoid(P) as the query source.
std::vector<Matrix> strategy_templates(OctStrategy strategy, const World& world, const Model& model,
                                       const SubstituteOptions& opts);

struct StrategyScore {
  OctStrategy strategy = OctStrategy::kLatentP;
  double macro_auroc = 0.0;
  double macro_auprc = 0.0;
  double accuracy = 0.0;
};

StrategyScore evaluate_strategy(OctStrategy strategy, const World& world, const Model& model,
                                const TripletBatch& test, const SubstituteOptions& opts);

}  // namespace predilect
