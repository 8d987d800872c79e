#pragma once

#include "predilect/autodiff.hpp"
#include "predilect/random.hpp"

namespace predilect {

// Learnable n x d logits; sigmoid(logits) is the gate applied to OCT features.
struct PredilectionMatrix {
  Parameter logits;

  // Uniform in [-0.1, 0.1], so the gate starts near 0.5 everywhere.
  static PredilectionMatrix init(std::size_t n, std::size_t d, Rng& rng);
};

// Single-head projections, each d x d.
struct AttentionHead {
  Parameter w_q;
  Parameter w_k;
  Parameter w_v;

  // Identity projections: until the head is trained, the refined cue equals
  // the text features.
  static AttentionHead init(std::size_t d);
};

struct FusionVars {
  Var attention;  // n x n, row-stochastic
  Var refined;    // n x d
};

struct FusionOutput {
  Matrix gated;      // query source as passed in (F_OP during training, sigmoid(P) at inference)
  Matrix attention;
  Matrix refined;
};

// F_O * sigmoid(P), element-wise.
Var gate(Tape& tape, PredilectionMatrix& p, Var oct_features);
Matrix gate(const PredilectionMatrix& p, const Matrix& oct_features);

// Q = query W_q, K = F_T W_k, V = F_T W_v, Att = softmax_rows(Q K^T / sqrt(d)),
// refined = Att V.
FusionVars cross_attend(Tape& tape, AttentionHead& head, Var query_source, Var text_features);
FusionOutput cross_attend(const AttentionHead& head, const Matrix& query_source,
                          const Matrix& text_features);

// Training-time query source: the gated OCT features.
Var training_query(Tape& tape, PredilectionMatrix& p, Var oct_features);
Matrix training_query(const PredilectionMatrix& p, const Matrix& oct_features);

// Inference-time query source: sigmoid(P), detached from any tape.
Matrix inference_query(const PredilectionMatrix& p);

}  // namespace predilect
