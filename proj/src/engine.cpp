#include "predilect/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "predilect/errors.hpp"
#include "predilect/metrics.hpp"

namespace predilect {

namespace {
constexpr std::uint64_t kDataStream = 0x64617461;     // "data"
constexpr std::uint64_t kOrderStream = 0x6f726472;    // "ordr"
constexpr std::uint64_t kPoolStream = 0x706f6f6c;     // "pool"
}  // namespace

std::string_view to_string(OctStrategy s) {
  switch (s) {
    case OctStrategy::kRandomSelection: return "RandomSelection";
    case OctStrategy::kAverageLatent: return "AverageLatent";
    case OctStrategy::kLatentP: return "LatentP";
  }
  return "unknown";
}

OctStrategy parse_oct_strategy(std::string_view name) {
  for (OctStrategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw FormatError("unknown oct_strategy '" + std::string(name) +
                    "' (expected RandomSelection, AverageLatent or LatentP)");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ContractError("epochs must be >= 0");
  if (warmup_epochs < 0 || warmup_epochs > epochs) throw ContractError("warmup_epochs must be in [0, epochs]");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ContractError("learning_rate must be a finite non-negative number");
  }
  if (batch_size < 2) throw ContractError("batch_size must be >= 2");
  if (samples_per_epoch < batch_size) throw ContractError("samples_per_epoch must be >= batch_size");
  if (!(aux_weight >= 0.0)) throw ContractError("aux_weight must be >= 0");
  loss().weights.validate();
}

LossConfig TrainConfig::loss() const {
  LossConfig c;
  c.weights = {lambda1, lambda2, tau, symmetric};
  c.aux_weight = aux_loss ? aux_weight : 0.0;
  return c;
}

int TrainConfig::steps_per_epoch() const { return (samples_per_epoch + batch_size - 1) / batch_size; }

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
  if (!param.same_shape(grad)) {
    throw ShapeError("sgd_step: parameter " + param.shape_string() + " vs gradient " + grad.shape_string());
  }
  auto p = param.data();
  auto g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
}

void sgd_step(std::span<Parameter* const> params, double lr) {
  for (Parameter* p : params) sgd_step(p->value, p->grad, lr);
}

double warmup_lr(std::size_t step, std::size_t total_warmup_steps, double base_lr) {
  if (total_warmup_steps == 0) return base_lr;
  const double frac = static_cast<double>(step) / static_cast<double>(total_warmup_steps);
  return base_lr * std::min(1.0, frac);
}

TrainResult train(const World& world, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  TrainResult result{Model::init(world, cfg.seed), {}};
  Model& model = result.model;
  const LossConfig loss_cfg = cfg.loss();

  const int steps = cfg.steps_per_epoch();
  std::vector<TripletBatch> batches;
  for (int b = 0; b < steps; ++b) {
    batches.push_back(sample_batch(world, cfg.batch_size, world.config.noise,
                                   derive_seed(cfg.seed, {kDataStream, static_cast<std::uint64_t>(b)})));
  }
  const std::size_t warmup_steps = static_cast<std::size_t>(cfg.warmup_epochs) * static_cast<std::size_t>(steps);
  auto params = model.parameters();

  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(batches.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng order_rng = make_rng(cfg.seed, {kOrderStream, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), order_rng);

    double total = 0.0;
    for (std::size_t b : order) {
      model.zero_grad();
      Tape tape;
      Var loss = pipeline_forward(tape, model, batches[b], loss_cfg).loss;
      const double value = loss.scalar();
      if (!std::isfinite(value)) throw TrainingDivergedError(step, "loss is " + std::to_string(value));
      tape.backward(loss);
      sgd_step(params, warmup_lr(step, warmup_steps, cfg.learning_rate));
      for (const Parameter* p : params) {
        if (!all_finite(p->value)) throw TrainingDivergedError(step, "parameter " + p->name + " is not finite");
      }
      total += value;
      ++step;
    }
    const double mean = total / static_cast<double>(batches.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  model.zero_grad();
  return result;
}

Matrix ProbeHead::logits(const Matrix& features) const {
  Tape tape(Tape::Mode::kInference);
  Var z = ad::add_row(ad::matmul(tape.constant(features), tape.constant(weight.value)), tape.constant(bias.value));
  return z.value();
}

std::vector<int> ProbeHead::predict(const Matrix& features) const {
  const Matrix z = logits(features);
  std::vector<int> out;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

ProbeHead train_probe(const Matrix& features, const std::vector<int>& labels, int num_classes,
                      const ProbeConfig& cfg) {
  if (num_classes < 1) throw ContractError("train_probe: num_classes must be >= 1");
  if (labels.size() != features.rows() || labels.empty()) {
    throw ContractError("train_probe: need one label per feature row");
  }
  std::vector<std::size_t> targets;
  for (int l : labels) {
    if (l < 0 || l >= num_classes) {
      throw ContractError("train_probe: label " + std::to_string(l) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    }
    targets.push_back(static_cast<std::size_t>(l));
  }
  const std::size_t c = static_cast<std::size_t>(num_classes);
  ProbeHead head{Parameter("probe.weight", Matrix(features.cols(), c)), Parameter("probe.bias", Matrix(1, c))};
  Parameter* params[] = {&head.weight, &head.bias};
  for (int s = 0; s < cfg.steps; ++s) {
    head.weight.zero_grad();
    head.bias.zero_grad();
    Tape tape;
    Var z = ad::add_row(ad::matmul(tape.constant(features), tape.parameter(head.weight)), tape.parameter(head.bias));
    Var loss = ad::scale(ad::select_mean(ad::log_softmax_rows(z), targets), -1.0);
    tape.backward(loss);
    sgd_step(params, cfg.learning_rate);
  }
  return head;
}

ProbeHead fine_tune_probe(const Model& model, const std::vector<Matrix>& fundus, const std::vector<int>& labels,
                          int num_classes, const ProbeConfig& cfg) {
  if (fundus.size() != labels.size()) throw ContractError("fine_tune_probe: sample and label counts differ");
  for (int l : labels) {
    if (l < 0 || l >= num_classes) {
      throw ContractError("fine_tune_probe: label " + std::to_string(l) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    }
  }
  Matrix features(fundus.size(), model.d);
  for (std::size_t i = 0; i < fundus.size(); ++i) {
    const Matrix row = pooled_fundus(model, fundus[i]);
    std::copy(row.data().begin(), row.data().end(), features.row(i).begin());
  }
  return train_probe(features, labels, num_classes, cfg);
}

Matrix oct_substitute(OctStrategy strategy, const World& world, const Model& model, int class_id,
                      const SubstituteOptions& opts) {
  if (strategy == OctStrategy::kLatentP) return inference_query(model.predilection);
  if (class_id < 0 || class_id >= static_cast<int>(world.classes.size())) {
    throw ContractError("oct_substitute: class " + std::to_string(class_id) + " not in the world");
  }
  if (opts.pool_size < 1) throw ContractError("oct_substitute: empty OCT pool");
  const DiseaseSpec& spec = world.classes[static_cast<std::size_t>(class_id)];
  Rng rng = make_rng(opts.seed, {kPoolStream, static_cast<std::uint64_t>(class_id)});
  std::vector<Matrix> pool;
  for (int i = 0; i < opts.pool_size; ++i) pool.push_back(make_sample(world, spec, opts.noise, rng).oct_raw);

  if (strategy == OctStrategy::kRandomSelection) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return encode(model.oct, pool[pick(rng)]);
  }
  Matrix mean(model.n, model.d);
  for (const Matrix& raw : pool) mean += encode(model.oct, raw);
  return scale(mean, 1.0 / static_cast<double>(pool.size()));
}

std::vector<Matrix> strategy_templates(OctStrategy strategy, const World& world, const Model& model,
                                       const SubstituteOptions& opts) {
  std::vector<Matrix> out;
  if (strategy == OctStrategy::kLatentP) {
    std::vector<ClassLabel> labels;
    for (const auto& spec : world.classes) labels.push_back({spec.name, spec.abbr});
    for (auto& proto : build_prototypes(model, labels)) out.push_back(std::move(proto.refined_text));
    return out;
  }
  for (const auto& spec : world.classes) {
    out.push_back(pool(gate(model.predilection, oct_substitute(strategy, world, model, spec.class_id, opts))));
  }
  return out;
}

StrategyScore evaluate_strategy(OctStrategy strategy, const World& world, const Model& model,
                                const TripletBatch& test, const SubstituteOptions& opts) {
  std::vector<ClassPrototype> prototypes;
  int c = 0;
  for (auto& t : strategy_templates(strategy, world, model, opts)) prototypes.push_back({c++, std::move(t)});
  const ClassificationReport r = evaluate_prototypes(model, prototypes, test);
  return {strategy, r.macro_auroc, r.macro_auprc, r.accuracy};
}

}  // namespace predilect
