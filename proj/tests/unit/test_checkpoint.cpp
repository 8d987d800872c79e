#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "predilect/checkpoint.hpp"
#include "predilect/errors.hpp"

using namespace predilect;

namespace {

struct Fixture {
  World world = make_world(3, 2, 4, 5);
  TrainConfig cfg = [] {
    TrainConfig c;
    c.epochs = 2;
    c.warmup_epochs = 1;
    c.samples_per_epoch = 8;
    c.batch_size = 4;
    return c;
  }();
  Model model = train(world, cfg).model;
};

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("predilect_" + name + "_" + std::to_string(::getpid()));
}

}  // namespace

TEST(Checkpoint, HeaderLineIsJsonAndPayloadIsLittleEndianDoubles) {
  Fixture f;
  const std::string bytes = Checkpoint::from_model(f.model, f.world, f.cfg).serialize();
  const std::size_t eol = bytes.find('\n');
  const auto header = nlohmann::json::parse(bytes.substr(0, eol));
  EXPECT_EQ(header["format"], "predilect-checkpoint");
  EXPECT_EQ(header["format_version"], 1);
  EXPECT_EQ(header["hyperparameters"]["train"]["epochs"], 2);
  EXPECT_EQ(header["hyperparameters"]["world"]["num_classes"], 3);
  std::size_t doubles = 0;
  for (const auto& t : header["tensors"]) doubles += t["shape"][0].get<std::size_t>() * t["shape"][1].get<std::size_t>();
  EXPECT_EQ(bytes.size() - eol - 1, 8 * doubles);
  // The first payload value is fundus_encoder.weight(0, 0).
  EXPECT_EQ(header["tensors"][0]["name"], "fundus_encoder.weight");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(bytes[eol + 1 + i]);
  double first;
  std::memcpy(&first, &bits, 8);
  EXPECT_EQ(first, f.model.fundus.weight.value(0, 0));
}

TEST(Checkpoint, EveryParameterAppearsOnce) {
  Fixture f;
  const Checkpoint ck = Checkpoint::from_model(f.model, f.world, f.cfg);
  std::set<std::string> names;
  for (const auto& t : ck.tensors) EXPECT_TRUE(names.insert(t.name).second) << t.name;
  EXPECT_EQ(names.size(), f.model.parameters().size());
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  Fixture f;
  const auto a = temp_file("a"), b = temp_file("b");
  Checkpoint::from_model(f.model, f.world, f.cfg).save(a);
  const Checkpoint loaded = Checkpoint::load(a);
  Checkpoint::from_model(loaded.to_model(), make_world(loaded.world), loaded.train).save(b);
  std::ifstream ia(a, std::ios::binary), ib(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(ia)), {}), sb((std::istreambuf_iterator<char>(ib)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(checksum(loaded.to_model()), checksum(f.model));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Checkpoint, RejectsCorruption) {
  Fixture f;
  const std::string good = Checkpoint::from_model(f.model, f.world, f.cfg).serialize();
  EXPECT_THROW(Checkpoint::parse(good.substr(0, good.size() - 1)), FormatError);
  EXPECT_THROW(Checkpoint::parse(good + "x"), FormatError);
  EXPECT_THROW(Checkpoint::parse("not a checkpoint"), FormatError);
  EXPECT_THROW(Checkpoint::parse("{}\n"), FormatError);

  Checkpoint missing = Checkpoint::parse(good);
  missing.tensors.pop_back();
  EXPECT_THROW(missing.to_model(), FormatError);
  Checkpoint dup = Checkpoint::parse(good);
  dup.tensors.push_back(dup.tensors.front());
  EXPECT_THROW(dup.to_model(), FormatError);
  Checkpoint bad_shape = Checkpoint::parse(good);
  bad_shape.tensors[0].value = Matrix(1, 1);
  EXPECT_THROW(bad_shape.to_model(), FormatError);
  EXPECT_THROW(Checkpoint::load(temp_file("does_not_exist")), FormatError);
}

TEST(Checksum, ChangesWithAnyParameter) {
  Fixture f;
  const std::uint64_t before = checksum(f.model);
  f.model.head.w_k.value(0, 0) += 1e-12;
  EXPECT_NE(checksum(f.model), before);
}
