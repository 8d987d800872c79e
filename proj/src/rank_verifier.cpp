#include "predilect/rank_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "predilect/errors.hpp"
#include "predilect/random.hpp"

namespace predilect {

namespace {

constexpr std::uint64_t kGeometryStream = 1;
constexpr std::uint64_t kPerturbStream = 2;

void check_projection(const Matrix& p_hat, const Matrix& w_q, const Matrix& key) {
  if (w_q.rows() != p_hat.cols() || w_q.cols() != p_hat.cols()) {
    throw ShapeError("W_Q " + w_q.shape_string() + " does not match width of " + p_hat.shape_string());
  }
  if (key.rows() != 1 || key.cols() != p_hat.cols()) {
    throw ShapeError("key " + key.shape_string() + " must be a 1 x " + std::to_string(p_hat.cols()) + " row");
  }
}

std::vector<double> row_dots(const Matrix& m, const Matrix& key) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) dot += m(i, j) * key(0, j);
    out[i] = dot;
  }
  return out;
}

}  // namespace

void NoiseSweepConfig::validate() const {
  if (n < 2) throw ContractError("noise sweep: n must be >= 2");
  if (d < 1) throw ContractError("noise sweep: d must be >= 1");
  if (trials < 1) throw ContractError("noise sweep: trials must be >= 1");
  if (noise_levels.empty()) throw ContractError("noise sweep: no noise levels");
  if (!std::is_sorted(noise_levels.begin(), noise_levels.end())) {
    throw ContractError("noise sweep: noise_levels must be sorted ascending");
  }
  if (noise_levels.front() < 0.0) throw ContractError("noise sweep: noise levels must be >= 0");
  if (!(logit_std > 0.0)) throw ContractError("noise sweep: logit_std must be positive");
}

std::vector<double> ideal_logits(const Matrix& p_hat, const Matrix& oct_features, const Matrix& w_q,
                                 const Matrix& key) {
  check_projection(p_hat, w_q, key);
  return row_dots(matmul(hadamard(oct_features, p_hat), w_q), key);
}

std::vector<double> proxy_logits(const Matrix& p_hat, const Matrix& w_q, const Matrix& key) {
  check_projection(p_hat, w_q, key);
  return row_dots(matmul(p_hat, w_q), key);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("kendall_tau: lengths differ");
  if (x.size() < 2) throw ContractError("kendall_tau: need at least 2 entries");
  long long score = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx * dy > 0.0) ++score;
      else if (dx * dy < 0.0) --score;
    }
  }
  const double pairs = static_cast<double>(x.size()) * static_cast<double>(x.size() - 1) / 2.0;
  return static_cast<double>(score) / pairs;
}

bool verify_squaring_monotonicity(std::span<const double> values) {
  for (double v : values) {
    if (v < 0.0) throw ContractError("verify_squaring_monotonicity: negative entry " + std::to_string(v));
  }
  // Sorting makes the pairwise check linear: strict order between neighbours
  // must survive squaring.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] > sorted[i - 1] && !(sorted[i] * sorted[i] > sorted[i - 1] * sorted[i - 1])) return false;
  }
  return true;
}

RankReport noise_sweep(const NoiseSweepConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n);
  const auto d = static_cast<std::size_t>(cfg.d);
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<std::vector<double>> taus(cfg.noise_levels.size());

  for (int trial = 0; trial < cfg.trials; ++trial) {
    // Geometry is shared across noise levels, so the levels are compared on
    // the same attention instances.
    Rng geo = make_rng(cfg.seed, {kGeometryStream, static_cast<std::uint64_t>(trial)});
    const Matrix p_hat = sigmoid(gaussian_matrix(n, d, cfg.logit_std, geo));
    const Matrix w_q = gaussian_matrix(d, d, proj_std, geo);
    const Matrix w_k = gaussian_matrix(d, d, proj_std, geo);
    const Matrix text = gaussian_matrix(1, d, 1.0, geo);
    const Matrix key = matmul(text, w_k);
    const auto proxy = proxy_logits(p_hat, w_q, key);

    for (std::size_t level = 0; level < cfg.noise_levels.size(); ++level) {
      Rng pert = make_rng(cfg.seed, {kPerturbStream, static_cast<std::uint64_t>(trial), level});
      const Matrix oct = add(scale(p_hat, cfg.alpha), gaussian_matrix(n, d, cfg.noise_levels[level], pert));
      taus[level].push_back(kendall_tau(ideal_logits(p_hat, oct, w_q, key), proxy));
    }
  }

  RankReport report;
  report.trials = cfg.trials;
  for (std::size_t level = 0; level < taus.size(); ++level) {
    const auto& t = taus[level];
    RankLevel r;
    r.noise_std = cfg.noise_levels[level];
    double sum = 0.0;
    for (double v : t) sum += v;
    r.mean_tau = sum / static_cast<double>(t.size());
    double var = 0.0;
    for (double v : t) var += (v - r.mean_tau) * (v - r.mean_tau);
    r.std_tau = std::sqrt(var / static_cast<double>(t.size()));
    r.exact_fraction = static_cast<double>(std::count(t.begin(), t.end(), 1.0)) / static_cast<double>(t.size());
    report.levels.push_back(r);
  }
  return report;
}

void write_rank_csv(std::ostream& out, const RankReport& report) {
  out << "noise_std,mean_tau,std_tau,exact_fraction\n";
  out << std::setprecision(12);
  for (const auto& l : report.levels) {
    out << l.noise_std << ',' << l.mean_tau << ',' << l.std_tau << ',' << l.exact_fraction << '\n';
  }
}

void write_rank_table(std::ostream& out, const RankReport& report) {
  out << "rank agreement of ideal vs proxy attention logits (" << report.trials << " trials/level)\n";
  out << std::setw(10) << "noise" << std::setw(12) << "mean tau" << std::setw(12) << "std tau"
      << std::setw(12) << "exact" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& l : report.levels) {
    out << std::setw(10) << l.noise_std << std::setw(12) << l.mean_tau << std::setw(12) << l.std_tau
        << std::setw(12) << l.exact_fraction << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

}  // namespace predilect
