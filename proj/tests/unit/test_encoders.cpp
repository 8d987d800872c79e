#include <cmath>

#include <gtest/gtest.h>

#include "predilect/encoders.hpp"
#include "predilect/errors.hpp"
#include "predilect/gradcheck.hpp"
#include "predilect/model.hpp"

using namespace predilect;

namespace {

Encoder with_weights(Matrix w, Matrix b) {
  Encoder e;
  e.weight = Parameter("w", std::move(w));
  e.bias = Parameter("b", std::move(b));
  return e;
}

}  // namespace

TEST(Encode, ZeroWeightsGiveZeroEmbedding) {
  const Encoder e = with_weights(Matrix(4, 4), Matrix(1, 4));
  Rng rng = make_rng(1);
  EXPECT_EQ(encode(e, uniform_matrix(3, 4, -5, 5, rng)), Matrix(3, 4));
}

TEST(Encode, IdentityWeightsApproximateInputNearZero) {
  const Encoder e = with_weights(Matrix::identity(4), Matrix(1, 4));
  Rng rng = make_rng(2);
  const Matrix raw = uniform_matrix(3, 4, -0.1, 0.1, rng);
  const Matrix out = encode(e, raw);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(out.data()[i], raw.data()[i], 1e-2);
}

TEST(Encode, ShapeAndRange) {
  Rng rng = make_rng(3);
  const Encoder e = Encoder::init(Modality::kOct, 6, rng);
  const Matrix out = encode(e, uniform_matrix(4, 6, -1, 1, rng));
  EXPECT_EQ(out.rows(), 4u);
  EXPECT_EQ(out.cols(), 6u);
  for (double v : out.data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  // tanh rounds to +-1 in double precision far from the origin.
  const Matrix saturated = encode(e, uniform_matrix(4, 6, -50, 50, rng));
  for (double v : saturated.data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(encode(e, Matrix(4, 5)), ShapeError);
}

TEST(Encode, WeightGradientMatchesFiniteDifferences) {
  Rng rng = make_rng(4);
  Encoder e = Encoder::init(Modality::kFundus, 4, rng);
  e.bias.value = uniform_matrix(1, 4, -0.5, 0.5, rng);
  const Matrix raw = uniform_matrix(3, 4, -2, 2, rng);
  Tape tape;
  tape.backward(ad::sum(encode(tape, e, raw)));
  const Matrix numeric = finite_diff_grad(
      [&](const Matrix& w) {
        const Matrix out = encode(with_weights(w, e.bias.value), raw);
        double s = 0.0;
        for (double v : out.data()) s += v;
        return s;
      },
      e.weight.value, 1e-4);
  EXPECT_LT(relative_error(e.weight.grad, numeric), 1e-3);
}

TEST(Tokenize, LowercasesAndStripsEdgePunctuation) {
  EXPECT_EQ(tokenize("This retina shows Alpha Retinopathy, AR"),
            (std::vector<std::string>{"this", "retina", "shows", "alpha", "retinopathy", "ar"}));
  EXPECT_EQ(tokenize("  (AR)  "), std::vector<std::string>{"ar"});
  EXPECT_TRUE(tokenize("  ,, ").empty());
}

class EncodeText : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng = make_rng(5);
    vocab = TextVocabulary::build({"alpha beta gamma", "beta delta"}, 4, rng);
  }
  TextVocabulary vocab;
};

TEST_F(EncodeText, VocabularyLayout) {
  EXPECT_EQ(vocab.tokens()[0], TextVocabulary::kUnknownToken);
  EXPECT_EQ(vocab.size(), 5u);
  EXPECT_EQ(vocab.index_of("nothing"), TextVocabulary::kUnknown);
  EXPECT_TRUE(std::is_sorted(vocab.tokens().begin() + 1, vocab.tokens().end()));
}

TEST_F(EncodeText, OneTokenPromptIsTiledEmbeddingRow) {
  const Matrix out = encode_text(vocab, "gamma", 3);
  const std::size_t idx = vocab.index_of("gamma");
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(r, c), vocab.embedding.value(idx, c));
  }
}

TEST_F(EncodeText, WordOrderDoesNotMatter) {
  EXPECT_EQ(encode_text(vocab, "alpha beta delta", 2), encode_text(vocab, "delta alpha beta", 2));
}

TEST_F(EncodeText, UnseenWordUsesReservedRow) {
  const Matrix out = encode_text(vocab, "zebra", 1);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(0, c), vocab.embedding.value(0, c));
}

TEST_F(EncodeText, RowsAreExactCopies) {
  const Matrix out = encode_text(vocab, "alpha beta gamma delta", 5);
  for (std::size_t r = 1; r < 5; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(r, c), out(0, c));
  }
}

TEST_F(EncodeText, Errors) {
  EXPECT_THROW(encode_text(vocab, "", 2), ContractError);
  EXPECT_THROW(encode_text(vocab, " ,. ", 2), ContractError);
  EXPECT_THROW(encode_text(vocab, "alpha", 0), ContractError);
}

TEST(EncoderGradients, EveryEncoderTensorReceivesGradient) {
  const World world = make_world(4, 4, 16, 1);
  Model model = Model::init(world, 3);
  const TripletBatch batch = sample_batch(world, 8, 0.5, 9);
  Tape tape;
  PipelineVars vars = pipeline_forward(tape, model, batch, LossConfig{});
  tape.backward(vars.loss);
  for (const Parameter* p : {&model.fundus.weight, &model.fundus.bias, &model.oct.weight, &model.oct.bias,
                             &model.text.embedding, &model.predilection.logits}) {
    EXPECT_GT(max_abs(p->grad), 1e-12) << p->name;
  }
}
