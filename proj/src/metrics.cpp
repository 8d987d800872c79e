#include "predilect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "predilect/errors.hpp"

namespace predilect {

namespace {

void check_set(const ScoredSet& s) {
  if (s.scores.size() != s.labels.size()) {
    throw ShapeError("scored set: " + std::to_string(s.scores.size()) + " scores but " +
                        std::to_string(s.labels.size()) + " labels");
  }
  for (int l : s.labels) {
    if (l != 0 && l != 1) throw ContractError("scored set: labels must be 0 or 1");
  }
}

// Indices ordered by descending score.
std::vector<std::size_t> by_score_desc(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auroc(const ScoredSet& s) {
  check_set(s);
  const auto positives = static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 1));
  const double negatives = static_cast<double>(s.labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw DegenerateLabelsError("auroc: need at least one positive and one negative label");
  }
  // Mann-Whitney U via average ranks (ascending, ties share their mean rank).
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (s.labels[order[k]] == 1) positive_rank_sum += mean_rank;
    }
    i = j;
  }
  const double u = positive_rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double auprc(const ScoredSet& s) {
  check_set(s);
  const auto positives = static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 1));
  if (positives == 0.0) throw DegenerateLabelsError("auprc: no positive labels");
  const auto order = by_score_desc(s.scores);
  double tp = 0.0, seen = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double new_tp = 0.0;
    while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) {
      new_tp += s.labels[order[j]];
      ++j;
    }
    tp += new_tp;
    seen += static_cast<double>(j - i);
    ap += (new_tp / positives) * (tp / seen);
    i = j;
  }
  return ap;
}

double macro_over_classes(std::span<const ScoredSet> per_class,
                          const std::function<double(const ScoredSet&)>& metric) {
  if (per_class.empty()) throw ContractError("macro_over_classes: no classes");
  double total = 0.0;
  for (const auto& s : per_class) total += metric(s);
  return total / static_cast<double>(per_class.size());
}

std::vector<ScoredSet> one_vs_rest(const std::vector<std::vector<double>>& scores,
                                   const std::vector<int>& truth, int num_classes) {
  if (scores.size() != truth.size()) throw ContractError("one_vs_rest: score and label counts differ");
  std::vector<ScoredSet> out(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != static_cast<std::size_t>(num_classes)) {
      throw ContractError("one_vs_rest: sample " + std::to_string(i) + " has the wrong number of scores");
    }
    for (int c = 0; c < num_classes; ++c) {
      out[static_cast<std::size_t>(c)].scores.push_back(scores[i][static_cast<std::size_t>(c)]);
      out[static_cast<std::size_t>(c)].labels.push_back(truth[i] == c ? 1 : 0);
    }
  }
  return out;
}

MeanStd seed_average(std::span<const double> runs) {
  if (runs.empty()) throw ContractError("seed_average: no runs");
  // Welford updates keep identical runs at exactly zero spread.
  double mean = 0.0, m2 = 0.0, k = 0.0;
  for (double r : runs) {
    k += 1.0;
    const double delta = r - mean;
    mean += delta / k;
    m2 += delta * (r - mean);
  }
  return {mean, std::sqrt(m2 / k)};
}

}  // namespace predilect
