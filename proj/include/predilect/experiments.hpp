#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "predilect/config.hpp"
#include "predilect/metrics.hpp"
#include "predilect/model.hpp"

namespace predilect {

// Held-out split for a training seed; disjoint from the training batches.
TripletBatch held_out_split(const World& world, int count, std::uint64_t seed);

struct AblationRow {
  OctStrategy strategy = OctStrategy::kLatentP;
  MeanStd roc;
  MeanStd prc;
  std::vector<double> per_seed_roc;
};

using ProgressFn = std::function<void(const std::string&)>;

// For every seed in cfg.eval.seeds: train once (training does not depend on
// the strategy), then score the held-out split with each strategy's templates.
std::vector<AblationRow> run_ablation(const RunConfig& cfg, const ProgressFn& progress = {});
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

// Loss trajectory CSV: header "epoch,mean_loss", one row per epoch.
void write_loss_csv(std::ostream& out, const std::vector<double>& epoch_loss);

// Finite-difference check of the whole pipeline on a fixed B=2, n=2, d=4
// instance, with the auxiliary refined-cue term both off and on.
GradCheckReport pipeline_gradcheck(BackwardFault fault = BackwardFault::kNone);

}  // namespace predilect
