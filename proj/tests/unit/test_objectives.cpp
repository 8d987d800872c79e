#include <cmath>

#include <gtest/gtest.h>

#include "predilect/errors.hpp"
#include "predilect/objectives.hpp"
#include "predilect/random.hpp"

using namespace predilect;

namespace {

// Direct evaluation of the anchor -> target InfoNCE term.
double reference_loss(const Matrix& a, const Matrix& t, double tau) {
  const std::size_t b = a.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double denom = 0.0;
    for (std::size_t j = 0; j < b; ++j) denom += std::exp(cosine_sim(a.row(i), t.row(j)) / tau);
    total += -std::log(std::exp(cosine_sim(a.row(i), t.row(i)) / tau) / denom);
  }
  return total / static_cast<double>(b);
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& order) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t c = 0; c < m.cols(); ++c) out(i, c) = m(order[i], c);
  return out;
}

}  // namespace

TEST(Pool, Examples) {
  const Matrix r = Matrix::from_rows({{1, -2, 3}});
  EXPECT_EQ(pool(r), r);
  EXPECT_EQ(pool(Matrix::from_rows({{1, -2, 3}, {1, -2, 3}})), r);
  EXPECT_EQ(pool(Matrix::from_rows({{1, -2, 3}, {-1, 2, -3}})), Matrix(1, 3));
}

TEST(ContrastiveLoss, IdentitySimilarityClosedForm) {
  const Matrix e = Matrix::identity(2);
  EXPECT_NEAR(contrastive_loss(e, e, 1.0), -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)), 1e-12);
  EXPECT_NEAR(contrastive_loss(e, e, 1.0), 0.31326, 1e-5);
}

TEST(ContrastiveLoss, UniformLogitsGiveLogB) {
  // Every anchor is orthogonal to every target, so all similarities are 0.
  const Matrix anchors = Matrix::from_rows({{1, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  const Matrix targets = Matrix::from_rows({{0, 1, 0}, {0, 0, 1}, {0, 1, 1}});
  EXPECT_NEAR(contrastive_loss(anchors, targets, 0.07), std::log(3.0), 1e-12);
}

TEST(ContrastiveLoss, PerfectAlignmentVanishesAsTauShrinks) {
  const Matrix e = Matrix::identity(3);
  double previous = contrastive_loss(e, e, 1.0);
  for (double tau : {0.5, 0.1, 0.05, 0.01}) {
    const double l = contrastive_loss(e, e, tau);
    EXPECT_LT(l, previous);
    previous = l;
  }
  EXPECT_LT(previous, 1e-40);
}

TEST(ContrastiveLoss, MatchesDirectEvaluation) {
  Rng rng = make_rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = uniform_matrix(5, 4, -2, 2, rng);
    const Matrix t = uniform_matrix(5, 4, -2, 2, rng);
    EXPECT_NEAR(contrastive_loss(a, t, 0.07), reference_loss(a, t, 0.07), 1e-10);
    EXPECT_NEAR(contrastive_loss(a, t, 0.5, true), reference_loss(a, t, 0.5) + reference_loss(t, a, 0.5), 1e-10);
  }
}

TEST(ContrastiveLoss, StrictlyPositivePermutationEquivariantScaleInvariant) {
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = uniform_matrix(4, 3, -2, 2, rng);
    const Matrix t = uniform_matrix(4, 3, -2, 2, rng);
    const double l = contrastive_loss(a, t, 0.2);
    EXPECT_GT(l, 0.0);
    const std::vector<std::size_t> order{2, 0, 3, 1};
    EXPECT_NEAR(contrastive_loss(permute_rows(a, order), permute_rows(t, order), 0.2), l, 1e-12);
    Matrix scaled = a;
    for (double& v : scaled.row(1)) v *= 4.5;
    EXPECT_NEAR(contrastive_loss(scaled, t, 0.2), l, 1e-9);
  }
}

TEST(ContrastiveLoss, Errors) {
  EXPECT_THROW(contrastive_loss(Matrix(1, 2, 1.0), Matrix(1, 2, 1.0), 0.1), ContractError);
  EXPECT_THROW(contrastive_loss(Matrix::identity(2), Matrix::identity(2), 0.0), ContractError);
  EXPECT_THROW(contrastive_loss(Matrix::from_rows({{0, 0}, {1, 0}}), Matrix::identity(2), 0.1),
               DegenerateVectorError);
  EXPECT_THROW(contrastive_loss(Matrix::identity(2), Matrix::identity(3), 0.1), ShapeError);
}

class TotalLoss : public ::testing::Test {
 protected:
  double total(const LossWeights& w) {
    Tape tape(Tape::Mode::kInference);
    return total_loss({tape.constant(f), tape.constant(op), tape.constant(t)}, w).scalar();
  }
  Rng rng = make_rng(3);
  Matrix f = uniform_matrix(4, 5, -1, 1, rng);
  Matrix op = uniform_matrix(4, 5, -1, 1, rng);
  Matrix t = uniform_matrix(4, 5, -1, 1, rng);
};

TEST_F(TotalLoss, DefaultWeights) {
  const LossWeights w;
  EXPECT_EQ(w.lambda1, 0.4);
  EXPECT_EQ(w.lambda2, 0.6);
  EXPECT_EQ(w.tau, 0.07);
  EXPECT_FALSE(w.symmetric);
}

TEST_F(TotalLoss, EqualsHandWeightedSum) {
  const LossWeights w;
  EXPECT_NEAR(total(w), 0.4 * contrastive_loss(f, op, 0.07) + 0.6 * contrastive_loss(f, t, 0.07), 1e-12);
}

TEST_F(TotalLoss, ZeroLambda1LeavesTextTerm) {
  EXPECT_NEAR(total({0.0, 0.6, 0.07, false}), 0.6 * contrastive_loss(f, t, 0.07), 1e-12);
}

TEST_F(TotalLoss, UniformSubLossesGiveWeightedLogB) {
  f = Matrix::from_rows({{1, 0, 0}, {2, 0, 0}});
  op = Matrix::from_rows({{0, 1, 0}, {0, 0, 1}});
  t = Matrix::from_rows({{0, 3, 0}, {0, 1, 1}});
  EXPECT_NEAR(total({0.4, 0.6, 0.07, false}), std::log(2.0), 1e-12);
}

TEST_F(TotalLoss, InvalidWeightsRejected) {
  EXPECT_THROW(LossWeights({-0.1, 0.6, 0.07, false}).validate(), ContractError);
  EXPECT_THROW(LossWeights({0.0, 0.0, 0.07, false}).validate(), ContractError);
  EXPECT_THROW(LossWeights({0.4, 0.6, 0.0, false}).validate(), ContractError);
}
