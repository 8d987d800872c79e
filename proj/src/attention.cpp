#include "predilect/attention.hpp"

#include <cmath>

#include "predilect/errors.hpp"

namespace predilect {

PredilectionMatrix PredilectionMatrix::init(std::size_t n, std::size_t d, Rng& rng) {
  return {Parameter("predilection.logits", uniform_matrix(n, d, -0.1, 0.1, rng))};
}

AttentionHead AttentionHead::init(std::size_t d) {
  return {Parameter("attention.w_q", Matrix::identity(d)), Parameter("attention.w_k", Matrix::identity(d)),
          Parameter("attention.w_v", Matrix::identity(d))};
}

Var gate(Tape& tape, PredilectionMatrix& p, Var oct_features) {
  if (!oct_features.value().same_shape(p.logits.value)) {
    throw ShapeError("gate: OCT features " + oct_features.value().shape_string() +
                     " vs predilection matrix " + p.logits.value.shape_string());
  }
  return ad::hadamard(oct_features, ad::sigmoid(tape.parameter(p.logits)));
}

Matrix gate(const PredilectionMatrix& p, const Matrix& oct_features) {
  Tape tape(Tape::Mode::kInference);
  return gate(tape, const_cast<PredilectionMatrix&>(p), tape.constant(oct_features)).value();
}

FusionVars cross_attend(Tape& tape, AttentionHead& head, Var query_source, Var text_features) {
  if (!query_source.value().same_shape(text_features.value())) {
    throw ShapeError("cross_attend: query source " + query_source.value().shape_string() +
                     " vs text features " + text_features.value().shape_string());
  }
  const std::size_t d = query_source.cols();
  if (head.w_q.value.rows() != d || head.w_q.value.cols() != d) {
    throw ShapeError("cross_attend: projections are " + head.w_q.value.shape_string() +
                     " for feature width " + std::to_string(d));
  }
  Var q = ad::matmul(query_source, tape.parameter(head.w_q));
  Var k = ad::matmul(text_features, tape.parameter(head.w_k));
  Var v = ad::matmul(text_features, tape.parameter(head.w_v));
  Var logits = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
  Var att = ad::softmax_rows(logits);
  return {att, ad::matmul(att, v)};
}

FusionOutput cross_attend(const AttentionHead& head, const Matrix& query_source,
                          const Matrix& text_features) {
  Tape tape(Tape::Mode::kInference);
  FusionVars out = cross_attend(tape, const_cast<AttentionHead&>(head), tape.constant(query_source),
                                tape.constant(text_features));
  return {query_source, out.attention.value(), out.refined.value()};
}

Var training_query(Tape& tape, PredilectionMatrix& p, Var oct_features) {
  return gate(tape, p, oct_features);
}

Matrix training_query(const PredilectionMatrix& p, const Matrix& oct_features) {
  return gate(p, oct_features);
}

Matrix inference_query(const PredilectionMatrix& p) { return sigmoid(p.logits.value); }

}  // namespace predilect
