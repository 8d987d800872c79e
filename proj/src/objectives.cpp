#include "predilect/objectives.hpp"

#include <numeric>
#include <vector>

#include "predilect/errors.hpp"

namespace predilect {

void LossWeights::validate() const {
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0)) throw ContractError("loss weights must be non-negative");
  if (!(lambda1 + lambda2 > 0.0)) throw ContractError("loss weights must not both be zero");
  if (!(tau > 0.0)) throw ContractError("temperature tau must be positive");
}

Var pool(Var tokens) { return ad::mean_rows(tokens); }

Matrix pool(const Matrix& tokens) { return mean_rows(tokens); }

namespace {

Var one_direction(Var anchors, Var targets, double tau) {
  Var sims = ad::matmul(ad::normalize_rows(anchors), ad::transpose(ad::normalize_rows(targets)));
  std::vector<std::size_t> diagonal(anchors.rows());
  std::iota(diagonal.begin(), diagonal.end(), std::size_t{0});
  return ad::scale(ad::select_mean(ad::log_softmax_rows(ad::scale(sims, 1.0 / tau)), diagonal), -1.0);
}

}  // namespace

Var contrastive_loss(Var anchors, Var targets, double tau, bool symmetric) {
  if (anchors.rows() < 2) throw ContractError("contrastive_loss: need at least 2 rows for in-batch negatives");
  if (!anchors.value().same_shape(targets.value())) {
    throw ShapeError("contrastive_loss: anchors " + anchors.value().shape_string() + " vs targets " +
                     targets.value().shape_string());
  }
  if (!(tau > 0.0)) throw ContractError("contrastive_loss: tau must be positive");
  Var loss = one_direction(anchors, targets, tau);
  if (symmetric) loss = ad::add(loss, one_direction(targets, anchors, tau));
  return loss;
}

double contrastive_loss(const Matrix& anchors, const Matrix& targets, double tau, bool symmetric) {
  Tape tape(Tape::Mode::kInference);
  return contrastive_loss(tape.constant(anchors), tape.constant(targets), tau, symmetric).scalar();
}

Var total_loss(const BatchEmbeddings& batch, const LossWeights& w) {
  w.validate();
  Var oct_term = contrastive_loss(batch.fundus, batch.gated_oct, w.tau, w.symmetric);
  Var text_term = contrastive_loss(batch.fundus, batch.text, w.tau, w.symmetric);
  return ad::add(ad::scale(oct_term, w.lambda1), ad::scale(text_term, w.lambda2));
}

}  // namespace predilect
