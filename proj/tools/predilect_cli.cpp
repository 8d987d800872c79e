#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "predilect/checkpoint.hpp"
#include "predilect/config.hpp"
#include "predilect/errors.hpp"
#include "predilect/experiments.hpp"
#include "predilect/random.hpp"
#include "predilect/sample_io.hpp"

namespace fs = std::filesystem;
using namespace predilect;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitVerify = 4;
constexpr double kGradTolerance = 1e-3;

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

fs::path loss_csv_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  return p.replace_extension(".loss.csv");
}

int cmd_train(const fs::path& config_path, const fs::path& out, fs::path loss_path) {
  const RunConfig cfg = load_run_config(config_path);
  const World world = make_world(cfg.world);
  if (loss_path.empty()) loss_path = loss_csv_path(out);
  const TrainResult result = train(world, cfg.train, [](int epoch, double loss) {
    std::cout << "epoch " << epoch + 1 << " loss " << std::setprecision(6) << loss << '\n';
  });
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  Checkpoint::from_model(result.model, world, cfg.train).save(out);
  std::ofstream csv = open_output(loss_path);
  write_loss_csv(csv, result.epoch_loss);
  std::cout << "wrote " << out.string() << " and " << loss_path.string() << '\n';
  return kExitOk;
}

int cmd_ablate(const fs::path& config_path, const fs::path& out_dir) {
  const RunConfig cfg = load_run_config(config_path);
  const auto rows = run_ablation(cfg, [](const std::string& line) { std::cout << line << '\n'; });
  std::ofstream csv = open_output(out_dir / "ablation.csv");
  write_ablation_csv(csv, rows);
  std::cout << std::fixed << std::setprecision(3);
  std::cout << std::left << std::setw(16) << "strategy" << "  ROC            PRC\n";
  for (const AblationRow& r : rows) {
    std::cout << std::setw(16) << to_string(r.strategy) << "  " << r.roc.mean << " +- " << r.roc.std << "  "
              << r.prc.mean << " +- " << r.prc.std << '\n';
  }
  return kExitOk;
}

int cmd_verify(const fs::path& config_path, const fs::path& out) {
  const RunConfig cfg = load_run_config(config_path);
  const RankReport report = noise_sweep(cfg.verify);
  std::ofstream csv = open_output(out);
  write_rank_csv(csv, report);
  write_rank_table(std::cout, report);
  return kExitOk;
}

int cmd_classify(const fs::path& ckpt_path, const fs::path& classes_path, const fs::path& samples_path,
                 const fs::path& out) {
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const Model model = ckpt.to_model();
  const std::vector<ClassLabel> classes = parse_classes(read_json_file(classes_path, "classes"));
  const std::vector<LabeledFundus> samples =
      parse_samples(read_json_file(samples_path, "samples"), model.n, model.d, classes);

  const auto prototypes = build_prototypes(model, classes);
  std::vector<std::string> ids;
  std::vector<int> truth;
  std::vector<Prediction> predictions;
  std::vector<Prediction> labeled;
  for (const LabeledFundus& s : samples) {
    ids.push_back(s.id);
    truth.push_back(s.label.value_or(-1));
    predictions.push_back(classify(model, prototypes, s.fundus));
    if (s.label) labeled.push_back(predictions.back());
  }
  std::ofstream csv = open_output(out);
  write_predictions_csv(csv, classes, ids, truth, predictions);

  std::vector<int> known;
  for (int t : truth) {
    if (t >= 0) known.push_back(t);
  }
  if (!known.empty()) {
    const ClassifySummary s = summarize(labeled, known, classes.size());
    std::cout << std::setprecision(6) << "accuracy," << s.accuracy << '\n'
              << "macro_auroc," << s.macro_auroc << '\n'
              << "macro_auprc," << s.macro_auprc << '\n';
  }
  return kExitOk;
}

int cmd_probe(const fs::path& ckpt_path, const fs::path& config_path, const fs::path& out) {
  const RunConfig cfg = load_run_config(config_path);
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const Model model = ckpt.to_model();
  const World world = make_world(ckpt.world);
  const int c = static_cast<int>(world.classes.size());

  auto split = [&](std::uint64_t tag) {
    const TripletBatch b = held_out_split(world, cfg.eval.test_size, derive_seed(ckpt.rng_seed, {tag}));
    std::vector<Matrix> x;
    std::vector<int> y;
    for (const Sample& s : b.samples) {
      x.push_back(s.fundus_raw);
      y.push_back(s.class_id);
    }
    return std::pair{x, y};
  };
  const auto [train_x, train_y] = split(1);
  const auto [test_x, test_y] = split(2);
  const ProbeHead head =
      fine_tune_probe(model, train_x, train_y, c, ProbeConfig{cfg.eval.probe_steps, cfg.eval.probe_lr});

  auto accuracy = [&](const std::vector<Matrix>& x, const std::vector<int>& y) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (head.predict(pooled_fundus(model, x[i]))[0] == y[i]) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(x.size());
  };
  std::ofstream csv = open_output(out);
  csv << "split,accuracy\n" << std::setprecision(6);
  csv << "train," << accuracy(train_x, train_y) << '\n';
  csv << "test," << accuracy(test_x, test_y) << '\n';
  return kExitOk;
}

int cmd_world(const fs::path& config_path, const fs::path& out) {
  const RunConfig cfg = load_run_config(config_path);
  std::ofstream json_out = open_output(out);
  json_out << world_to_json(make_world(cfg.world)).dump(2) << '\n';
  return kExitOk;
}

int cmd_gradcheck(const std::string& fault_name) {
  BackwardFault fault = BackwardFault::kNone;
  if (fault_name == "sigmoid") {
    fault = BackwardFault::kSigmoid;
  } else if (!fault_name.empty()) {
    throw FormatError("unknown fault '" + fault_name + "'");
  }
  const GradCheckReport report = pipeline_gradcheck(fault);
  std::cout << std::scientific << std::setprecision(3);
  for (const GradCheckEntry& e : report.entries) {
    std::cout << std::left << std::setw(34) << e.name << e.relative_error << '\n';
  }
  std::cout << "max_relative_error " << report.max_relative_error << '\n';
  const bool ok = std::isfinite(report.max_relative_error) && report.max_relative_error < kGradTolerance;
  std::cout << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"predilect: predilection-matrix training, evaluation and verification"};
  app.require_subcommand(1);

  fs::path config, out, out_dir, ckpt, classes, samples, loss_csv;
  std::string fault;

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint plus loss CSV");
  train_cmd->add_option("--config", config)->required();
  train_cmd->add_option("--out", out, "Checkpoint path")->required();
  train_cmd->add_option("--loss-csv", loss_csv, "Loss CSV path (default: <out> with .loss.csv)");

  auto* ablate_cmd = app.add_subcommand("ablate", "Compare OCT substitution strategies over seeds");
  ablate_cmd->add_option("--config", config)->required();
  ablate_cmd->add_option("--out-dir", out_dir)->required();

  auto* verify_cmd = app.add_subcommand("verify", "Monte-Carlo rank-preservation sweep");
  verify_cmd->add_option("--config", config)->required();
  verify_cmd->add_option("--out", out)->required();

  auto* classify_cmd = app.add_subcommand("classify", "Zero-shot classification of fundus samples");
  classify_cmd->add_option("--ckpt", ckpt)->required();
  classify_cmd->add_option("--classes", classes)->required();
  classify_cmd->add_option("--samples", samples)->required();
  classify_cmd->add_option("--out", out)->required();

  auto* probe_cmd = app.add_subcommand("probe", "Linear probe on frozen fundus embeddings");
  probe_cmd->add_option("--ckpt", ckpt)->required();
  probe_cmd->add_option("--config", config)->required();
  probe_cmd->add_option("--out", out)->required();

  auto* world_cmd = app.add_subcommand("world", "Export the synthetic world as JSON");
  world_cmd->add_option("--config", config)->required();
  world_cmd->add_option("--out", out)->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full pipeline");
  grad_cmd->add_option("--inject-fault", fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  return guarded([&] {
    if (*train_cmd) return cmd_train(config, out, loss_csv);
    if (*ablate_cmd) return cmd_ablate(config, out_dir);
    if (*verify_cmd) return cmd_verify(config, out);
    if (*classify_cmd) return cmd_classify(ckpt, classes, samples, out);
    if (*probe_cmd) return cmd_probe(ckpt, config, out);
    if (*world_cmd) return cmd_world(config, out);
    return cmd_gradcheck(fault);
  });
}
