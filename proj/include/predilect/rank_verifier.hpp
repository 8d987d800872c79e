#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "predilect/matrix.hpp"

namespace predilect {

// Monte-Carlo check of whether sigmoid(P) can stand in for OCT features when
// ranking spatial locations by attention logit, with F_O = alpha * sigmoid(P) + B.
struct NoiseSweepConfig {
  int n = 8;
  int d = 16;
  double alpha = 1.0;
  std::vector<double> noise_levels = {0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
  int trials = 500;
  std::uint64_t seed = 7;
  double logit_std = 2.0;  // std of the pre-sigmoid P entries

  // Throws ContractError on trials < 1, unsorted or negative noise levels, or bad dims.
  void validate() const;
};

struct RankLevel {
  double noise_std = 0.0;
  double mean_tau = 0.0;
  double std_tau = 0.0;
  double exact_fraction = 0.0;  // trials with identical rank order (tau == 1)
};

struct RankReport {
  std::vector<RankLevel> levels;
  int trials = 0;
};

// Per-location logits ((F_O * P_hat)_i W_Q) . key. key is the 1 x d row F_T W_K.
std::vector<double> ideal_logits(const Matrix& p_hat, const Matrix& oct_features, const Matrix& w_q,
                                 const Matrix& key);
// Per-location logits (P_hat_i W_Q) . key.
std::vector<double> proxy_logits(const Matrix& p_hat, const Matrix& w_q, const Matrix& key);

// Tau-a: (concordant - discordant) / (n choose 2); tied pairs count as neither.
// Throws ContractError when n < 2 or lengths differ.
double kendall_tau(std::span<const double> x, std::span<const double> y);

// True iff squaring preserves strict order across every pair of entries.
// Throws ContractError on a negative entry.
bool verify_squaring_monotonicity(std::span<const double> values);

RankReport noise_sweep(const NoiseSweepConfig& cfg);

void write_rank_csv(std::ostream& out, const RankReport& report);
void write_rank_table(std::ostream& out, const RankReport& report);

}  // namespace predilect
