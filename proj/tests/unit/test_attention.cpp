#include <cmath>

#include <gtest/gtest.h>

#include "predilect/attention.hpp"
#include "predilect/errors.hpp"
#include "predilect/gradcheck.hpp"

using namespace predilect;

namespace {

PredilectionMatrix with_logits(Matrix p) {
  PredilectionMatrix m;
  m.logits = Parameter("p", std::move(p));
  return m;
}

AttentionHead random_head(std::size_t d, Rng& rng) {
  AttentionHead h = AttentionHead::init(d);
  h.w_q.value = uniform_matrix(d, d, -1, 1, rng);
  h.w_k.value = uniform_matrix(d, d, -1, 1, rng);
  h.w_v.value = uniform_matrix(d, d, -1, 1, rng);
  return h;
}

// Independent loop re-implementation of single-head attention.
std::pair<Matrix, Matrix> reference_attention(const AttentionHead& h, const Matrix& src, const Matrix& text) {
  const std::size_t n = src.rows(), d = src.cols();
  auto project = [&](const Matrix& x, const Matrix& w) {
    Matrix out(x.rows(), d);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < d; ++k) out(i, j) += x(i, k) * w(k, j);
    return out;
  };
  const Matrix q = project(src, h.w_q.value), k = project(text, h.w_k.value), v = project(text, h.w_v.value);
  Matrix att(n, text.rows());
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < text.rows(); ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += q(i, c) * k(j, c);
      att(i, j) = std::exp(dot / std::sqrt(static_cast<double>(d)));
      z += att(i, j);
    }
    for (std::size_t j = 0; j < text.rows(); ++j) att(i, j) /= z;
  }
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < text.rows(); ++j)
      for (std::size_t c = 0; c < d; ++c) out(i, c) += att(i, j) * v(j, c);
  return {att, out};
}

}  // namespace

TEST(Gate, Examples) {
  Rng rng = make_rng(1);
  const Matrix f = uniform_matrix(2, 3, -2, 2, rng);
  EXPECT_EQ(gate(with_logits(Matrix(2, 3)), f), scale(f, 0.5));
  const Matrix saturated = gate(with_logits(Matrix(2, 3, 50.0)), f);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(saturated.data()[i], f.data()[i], 1e-9);
  EXPECT_EQ(gate(with_logits(Matrix(1, 2)), Matrix::from_rows({{2, -1}})), Matrix::from_rows({{1, -0.5}}));
  EXPECT_THROW(gate(with_logits(Matrix(2, 3)), Matrix(3, 2)), ShapeError);
}

TEST(Gate, TrainingQueryDelegatesToGate) {
  Rng rng = make_rng(2);
  const PredilectionMatrix p = with_logits(uniform_matrix(2, 3, -3, 3, rng));
  const Matrix f = uniform_matrix(2, 3, -2, 2, rng);
  EXPECT_EQ(training_query(p, f), gate(p, f));
}

TEST(Gate, MagnitudeStrictlyIncreasesWithLogit) {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix f = uniform_matrix(2, 3, -2, 2, rng);
    PredilectionMatrix p = with_logits(uniform_matrix(2, 3, -4, 4, rng));
    const Matrix before = gate(p, f);
    p.logits.value(1, 2) += 0.25;
    const Matrix after = gate(p, f);
    if (f(1, 2) != 0.0) {
      EXPECT_GT(std::abs(after(1, 2)), std::abs(before(1, 2)));
      EXPECT_EQ(std::signbit(after(1, 2)), std::signbit(f(1, 2)));
    }
  }
}

TEST(InferenceQuery, RangeAndZeroLogits) {
  EXPECT_EQ(inference_query(with_logits(Matrix(2, 3))), Matrix(2, 3, 0.5));
  Rng rng = make_rng(4);
  const Matrix q = inference_query(with_logits(uniform_matrix(4, 4, -20, 20, rng)));
  for (double v : q.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(InferenceQuery, MatchesTrainingQueryOnAllOnesOct) {
  Rng rng = make_rng(5);
  const PredilectionMatrix p = with_logits(uniform_matrix(3, 4, -3, 3, rng));
  EXPECT_EQ(training_query(p, Matrix(3, 4, 1.0)), inference_query(p));
}

TEST(InferenceQuery, DetachedFromGradients) {
  PredilectionMatrix p = with_logits(Matrix(1, 2, 0.3));
  const Matrix q = inference_query(p);
  EXPECT_EQ(p.logits.grad, Matrix(1, 2));
  EXPECT_EQ(q, sigmoid(p.logits.value));
}

TEST(CrossAttend, SingleKeyReturnsValue) {
  Rng rng = make_rng(6);
  const AttentionHead h = random_head(4, rng);
  const Matrix text = uniform_matrix(1, 4, -1, 1, rng);
  const FusionOutput out = cross_attend(h, inference_query(with_logits(uniform_matrix(1, 4, -1, 1, rng))), text);
  EXPECT_EQ(out.attention, Matrix(1, 1, 1.0));
  const Matrix v = matmul(text, h.w_v.value);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out.refined(0, c), v(0, c), 1e-15);
}

TEST(CrossAttend, IdenticalTextRowsGiveIdenticalOutputRows) {
  Rng rng = make_rng(7);
  const AttentionHead h = random_head(4, rng);
  const Matrix row = uniform_matrix(1, 4, -1, 1, rng);
  Matrix text(3, 4);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) text(r, c) = row(0, c);
  const FusionOutput out = cross_attend(h, uniform_matrix(3, 4, -2, 2, rng), text);
  const Matrix v = matmul(row, h.w_v.value);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out.refined(r, c), v(0, c), 1e-12);
}

TEST(CrossAttend, MatchesLoopReferenceAndRowsAreStochastic) {
  Rng rng = make_rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const AttentionHead h = random_head(4, rng);
    const Matrix src = uniform_matrix(3, 4, -2, 2, rng);
    const Matrix text = uniform_matrix(3, 4, -2, 2, rng);
    const FusionOutput out = cross_attend(h, src, text);
    const auto [att, refined] = reference_attention(h, src, text);
    for (std::size_t i = 0; i < 3; ++i) {
      double sum = 0.0;
      for (double v : out.attention.row(i)) sum += v;
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    for (std::size_t i = 0; i < att.size(); ++i) EXPECT_NEAR(out.attention.data()[i], att.data()[i], 1e-12);
    for (std::size_t i = 0; i < refined.size(); ++i) EXPECT_NEAR(out.refined.data()[i], refined.data()[i], 1e-12);
  }
}

TEST(CrossAttend, ShapeMismatchThrows) {
  const AttentionHead h = AttentionHead::init(4);
  EXPECT_THROW(cross_attend(h, Matrix(3, 4), Matrix(2, 4)), ShapeError);
  EXPECT_THROW(cross_attend(h, Matrix(3, 3), Matrix(3, 3)), ShapeError);
}

TEST(CrossAttend, AllHeadGradientsMatchFiniteDifferences) {
  Rng rng = make_rng(9);
  AttentionHead h = random_head(4, rng);
  const Matrix src = uniform_matrix(3, 4, -1, 1, rng);
  const Matrix text = uniform_matrix(3, 4, -1, 1, rng);
  const Matrix weight = uniform_matrix(3, 4, -1, 1, rng);
  auto objective = [&](const AttentionHead& head) {
    const Matrix out = cross_attend(head, src, text).refined;
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * weight.data()[i];
    return s;
  };
  Tape tape;
  const FusionVars vars = cross_attend(tape, h, tape.constant(src), tape.constant(text));
  tape.backward(ad::sum(ad::hadamard(vars.refined, tape.constant(weight))));
  for (Parameter* p : {&h.w_q, &h.w_k, &h.w_v}) {
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& w) {
          AttentionHead copy = h;
          for (Parameter* q : {&copy.w_q, &copy.w_k, &copy.w_v}) {
            if (q->name == p->name) q->value = w;
          }
          return objective(copy);
        },
        p->value, 1e-4);
    EXPECT_GT(max_abs(p->grad), 1e-6) << p->name;
    EXPECT_LT(relative_error(p->grad, numeric), 1e-3) << p->name;
  }
}
