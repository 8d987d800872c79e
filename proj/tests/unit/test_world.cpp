#include <set>

#include <gtest/gtest.h>

#include "predilect/errors.hpp"
#include "predilect/world.hpp"

using namespace predilect;

TEST(MakeWorld, TwoClassesOnOneRow) {
  const World w = make_world(2, 1, 8, 7);
  ASSERT_EQ(w.classes.size(), 2u);
  EXPECT_NE(w.classes[0].site_mask, w.classes[1].site_mask);
}

TEST(MakeWorld, Deterministic) {
  const World a = make_world(4, 4, 16, 3);
  const World b = make_world(4, 4, 16, 3);
  EXPECT_EQ(world_to_json(a), world_to_json(b));
  EXPECT_EQ(a.fundus_map, b.fundus_map);
}

TEST(MakeWorld, MasksNonzeroAndPairwiseDistinct) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (auto [c, n, d] : {std::tuple{3, 2, 4}, std::tuple{6, 1, 3}, std::tuple{8, 4, 16}}) {
      const World w = make_world(c, n, d, seed);
      std::set<std::vector<double>> seen;
      for (const DiseaseSpec& s : w.classes) {
        EXPECT_GT(max_abs(s.site_mask), 0.0);
        for (double v : s.site_mask.data()) EXPECT_TRUE(v == 0.0 || v == 1.0);
        EXPECT_TRUE(seen.insert({s.site_mask.data().begin(), s.site_mask.data().end()}).second);
        EXPECT_GE(s.prompt_bank.size(), 3u);
        EXPECT_EQ(s.prompt_bank[0], render_prompt(kPrimaryTemplate, s.name, s.abbr));
      }
    }
  }
}

TEST(MakeWorld, CapacityAndArgumentErrors) {
  EXPECT_NO_THROW(make_world(3, 1, 2, 1));
  EXPECT_THROW(make_world(4, 1, 2, 1), CapacityError);
  EXPECT_THROW(make_world(1, 2, 4, 1), ContractError);
  EXPECT_THROW(make_world(2, 0, 4, 1), ContractError);
  EXPECT_THROW(make_world(2, 2, 1, 1), ContractError);
}

TEST(RenderPrompt, Examples) {
  EXPECT_EQ(render_prompt("shows {NAME}, {ABBR}", "Diabetic Retinopathy", "DR"), "shows Diabetic Retinopathy, DR");
  EXPECT_EQ(render_prompt(kPrimaryTemplate, "Diabetic Retinopathy", "DR"),
            "This retina fundus image shows Diabetic Retinopathy, DR");
  EXPECT_EQ(render_prompt("shows {NAME}, {ABBR}", "X", ""), "shows X, ");
  EXPECT_THROW(render_prompt("shows {NAME}", "X", "Y"), TemplateError);
  EXPECT_THROW(render_prompt("shows {ABBR}", "X", "Y"), TemplateError);
  for (const std::string& t : prompt_templates()) EXPECT_NO_THROW(render_prompt(t, "a", "b"));
}

TEST(SampleBatch, ZeroNoiseOctSupportedExactlyOnMask) {
  const World w = make_world(3, 2, 4, 1);
  for (const Sample& s : sample_batch(w, 9, 0.0, 5).samples) {
    const Matrix& mask = w.classes[static_cast<std::size_t>(s.class_id)].site_mask;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask.data()[i] == 0.0) {
        EXPECT_EQ(s.oct_raw.data()[i], 0.0);
      } else {
        EXPECT_GT(s.oct_raw.data()[i], 0.0);
      }
    }
  }
}

TEST(SampleBatch, DeterministicAndBalanced) {
  const World w = make_world(2, 4, 16, 1);
  const TripletBatch a = sample_batch(w, 8, 0.5, 11);
  const TripletBatch b = sample_batch(w, 8, 0.5, 11);
  ASSERT_EQ(a.samples.size(), 8u);
  int per_class[2] = {0, 0};
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a.samples[i].fundus_raw, b.samples[i].fundus_raw);
    EXPECT_EQ(a.samples[i].oct_raw, b.samples[i].oct_raw);
    EXPECT_EQ(a.samples[i].prompt, b.samples[i].prompt);
    ++per_class[a.samples[i].class_id];
  }
  EXPECT_EQ(per_class[0], 4);
  EXPECT_EQ(per_class[1], 4);
  const World three = make_world(3, 4, 16, 1);
  int counts[3] = {0, 0, 0};
  for (const Sample& s : sample_batch(three, 8, 0.5, 2).samples) ++counts[s.class_id];
  for (int c : counts) EXPECT_TRUE(c == 2 || c == 3);
}

TEST(SampleBatch, ContrastInvariantHolds) {
  for (double keep : {1.0, 0.5, 0.3}) {
    WorldConfig cfg;
    cfg.site_keep = keep;
    const World w = make_world(cfg);
    for (double noise : {0.1, 0.5, 1.0, 2.0}) {
      for (const Sample& s : sample_batch(w, 40, noise, 3).samples) {
        EXPECT_GE(mask_contrast(s.oct_raw, w.classes[static_cast<std::size_t>(s.class_id)].site_mask), 2.0);
      }
    }
  }
}

TEST(SampleBatch, PromptsComeFromClassBankAndPairsShareClass) {
  const World w = make_world(4, 4, 16, 2);
  for (const Sample& s : sample_batch(w, 16, 0.5, 8).samples) {
    const auto& bank = w.classes[static_cast<std::size_t>(s.class_id)].prompt_bank;
    EXPECT_NE(std::find(bank.begin(), bank.end(), s.prompt), bank.end());
    EXPECT_NE(s.fundus_raw, s.oct_raw);
  }
}

TEST(SampleBatch, Errors) {
  const World w = make_world(2, 2, 4, 1);
  EXPECT_THROW(sample_batch(w, 1, 0.5, 1), ContractError);
  EXPECT_THROW(sample_batch(w, 4, -0.1, 1), ContractError);
  EXPECT_THROW(sample_from(w, {}, 4, 0.5, 1), ContractError);
}

TEST(SiteKeep, ScansShowSubsetsOfTheMask) {
  WorldConfig cfg;
  cfg.site_keep = 0.5;
  const World w = make_world(cfg);
  bool saw_partial = false;
  for (const Sample& s : sample_batch(w, 16, 0.0, 4).samples) {
    const Matrix& mask = w.classes[static_cast<std::size_t>(s.class_id)].site_mask;
    std::size_t shown = 0, total = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask.data()[i] == 0.0) EXPECT_EQ(s.oct_raw.data()[i], 0.0);
      total += mask.data()[i] != 0.0;
      shown += s.oct_raw.data()[i] != 0.0;
    }
    EXPECT_GE(shown, 1u);
    saw_partial |= shown < total;
  }
  EXPECT_TRUE(saw_partial);
}

TEST(WorldJson, RoundTripRegeneratesTheSameWorld) {
  WorldConfig cfg;
  cfg.num_classes = 5;
  cfg.seed = 9;
  const World w = make_world(cfg);
  const nlohmann::json doc = world_to_json(w);
  EXPECT_EQ(doc["classes"][0]["site_mask"].size(), 4u);
  const World back = world_from_json(doc);
  EXPECT_EQ(world_to_json(back), doc);
  nlohmann::json tampered = doc;
  tampered["classes"][0]["name"] = "Other";
  EXPECT_THROW(world_from_json(tampered), FormatError);
}

TEST(MakeDisease, SharedMaskSharesFundusPattern) {
  const World w = make_world(3, 4, 16, 1);
  const DiseaseSpec twin = make_disease(w, 0, "Twin Disease", "TD", w.classes[1].site_mask);
  EXPECT_EQ(twin.fundus_pattern, w.classes[1].fundus_pattern);
  EXPECT_THROW(make_disease(w, 0, "Empty", "E", Matrix(4, 16)), ContractError);
}
