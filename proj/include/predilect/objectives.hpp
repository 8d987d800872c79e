#pragma once

#include "predilect/autodiff.hpp"

namespace predilect {

struct LossWeights {
  double lambda1 = 0.4;  // fundus <-> gated OCT
  double lambda2 = 0.6;  // fundus <-> text
  double tau = 0.07;
  bool symmetric = false;  // also add the target -> anchor direction

  // Throws ContractError unless lambda1, lambda2 >= 0, their sum > 0 and tau > 0.
  void validate() const;
};

struct BatchEmbeddings {
  Var fundus;  // B x d, one pooled row per sample
  Var gated_oct;
  Var text;
};

// Mean over the token rows: n x d -> 1 x d.
Var pool(Var tokens);
Matrix pool(const Matrix& tokens);

// Mean over anchors i of -log softmax_j(cos(a_i, t_j) / tau)[i], anchor -> target.
// Throws ContractError when B < 2 or tau <= 0, DegenerateVectorError on a zero row.
Var contrastive_loss(Var anchors, Var targets, double tau, bool symmetric = false);
double contrastive_loss(const Matrix& anchors, const Matrix& targets, double tau, bool symmetric = false);

// lambda1 * L(fundus, gated_oct) + lambda2 * L(fundus, text).
Var total_loss(const BatchEmbeddings& batch, const LossWeights& w);

}  // namespace predilect
