#include <gtest/gtest.h>

#include "predilect/experiments.hpp"
#include "predilect/model.hpp"

using namespace predilect;

TEST(Pipeline, ForwardLossMatchesValueLevelLoss) {
  const World world = make_world(4, 4, 16, 1);
  Model model = Model::init(world, 2);
  const TripletBatch batch = sample_batch(world, 8, 0.5, 3);
  Tape tape;
  const PipelineVars vars = pipeline_forward(tape, model, batch, LossConfig{});
  EXPECT_EQ(vars.loss.scalar(), pipeline_loss(model, batch, LossConfig{}));
  EXPECT_FALSE(vars.refined.valid());
  EXPECT_EQ(vars.pooled.fundus.rows(), 8u);
}

TEST(Pipeline, FixedInstanceGradientsMatchFiniteDifferences) {
  const GradCheckReport r = pipeline_gradcheck();
  EXPECT_EQ(r.entries.size(), 18u);
  for (const GradCheckEntry& e : r.entries) EXPECT_LT(e.relative_error, 1e-3) << e.name;
}

TEST(Pipeline, CorruptedSigmoidBackwardIsCaught) {
  EXPECT_GT(pipeline_gradcheck(BackwardFault::kSigmoid).max_relative_error, 1e-3);
}

TEST(Pipeline, GradientsMatchOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const World world = make_world(3, 2, 4, seed);
    const Model model = Model::init(world, seed);
    const TripletBatch batch = sample_batch(world, 3, 0.5, seed);
    LossConfig cfg;
    cfg.aux_weight = 0.5;
    cfg.weights.symmetric = seed % 2 == 0;
    EXPECT_LT(check_pipeline_gradients(model, batch, cfg).max_relative_error, 1e-3) << "seed " << seed;
  }
}
