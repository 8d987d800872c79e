#include "predilect/experiments.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "predilect/random.hpp"

namespace predilect {

namespace {
constexpr std::uint64_t kTestStream = 0x74657374;
constexpr std::uint64_t kSubstStream = 0x73756273;
constexpr std::uint64_t kGradStream = 0x67726164;
}  // namespace

TripletBatch held_out_split(const World& world, int count, std::uint64_t seed) {
  return sample_batch(world, count, world.config.noise, derive_seed(seed, {kTestStream}));
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const ProgressFn& progress) {
  const World world = make_world(cfg.world);
  constexpr std::size_t kCount = std::size(kAllStrategies);
  std::vector<std::vector<double>> roc(kCount), prc(kCount);
  for (std::uint64_t seed : cfg.eval.seeds) {
    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = seed;
    const Model model = train(world, train_cfg).model;
    const TripletBatch test = held_out_split(world, cfg.eval.test_size, seed);
    const SubstituteOptions opts{cfg.eval.pool_size, derive_seed(seed, {kSubstStream}), world.config.noise};
    for (std::size_t i = 0; i < kCount; ++i) {
      const StrategyScore s = evaluate_strategy(kAllStrategies[i], world, model, test, opts);
      roc[i].push_back(s.macro_auroc);
      prc[i].push_back(s.macro_auprc);
      if (progress) {
        std::ostringstream msg;
        msg << "seed " << seed << ' ' << to_string(s.strategy) << std::fixed << std::setprecision(4)
            << " roc=" << s.macro_auroc << " prc=" << s.macro_auprc;
        progress(msg.str());
      }
    }
  }
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < kCount; ++i) {
    rows.push_back({kAllStrategies[i], seed_average(roc[i]), seed_average(prc[i]), roc[i]});
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "strategy,mean_roc,std_roc,mean_prc,std_prc\n";
  out << std::setprecision(6) << std::fixed;
  for (const AblationRow& r : rows) {
    out << to_string(r.strategy) << ',' << r.roc.mean << ',' << r.roc.std << ',' << r.prc.mean << ','
        << r.prc.std << '\n';
  }
}

void write_loss_csv(std::ostream& out, const std::vector<double>& epoch_loss) {
  out << "epoch,mean_loss\n";
  out << std::setprecision(10);
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) out << e + 1 << ',' << epoch_loss[e] << '\n';
}

GradCheckReport pipeline_gradcheck(BackwardFault fault) {
  const World world = make_world(2, 2, 4, 11);
  Model model = Model::init(world, derive_seed(11, {kGradStream}));
  // Move the gate and the head away from their symmetric starting points.
  Rng rng = make_rng(11, {kGradStream, 1});
  model.predilection.logits.value = gaussian_matrix(2, 4, 1.0, rng);
  for (Parameter* w : {&model.head.w_q, &model.head.w_k, &model.head.w_v}) {
    w->value += gaussian_matrix(4, 4, 0.3, rng);
  }
  const TripletBatch batch = sample_batch(world, 2, world.config.noise, derive_seed(11, {kGradStream, 2}));

  GradCheckReport merged;
  for (double aux : {0.0, 0.5}) {
    LossConfig cfg;
    cfg.aux_weight = aux;
    const GradCheckReport r = check_pipeline_gradients(model, batch, cfg, 1e-5, fault);
    for (const GradCheckEntry& e : r.entries) {
      merged.entries.push_back({e.name + (aux > 0 ? " (aux)" : ""), e.relative_error});
    }
    merged.max_relative_error = std::max(merged.max_relative_error, r.max_relative_error);
  }
  return merged;
}

}  // namespace predilect
