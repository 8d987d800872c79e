#pragma once

#include <functional>
#include <span>
#include <vector>

namespace predilect {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 or 1, same length as scores
};

// Probability that a random positive outscores a random negative, ties
// counted as one half. Throws DegenerateLabelsError unless both labels occur.
double auroc(const ScoredSet& s);

// Average precision: sum over recall increments of the precision at that
// threshold, with tied scores entering together. Throws DegenerateLabelsError
// when there is no positive.
double auprc(const ScoredSet& s);

// Unweighted mean of metric over per-class one-vs-rest sets.
double macro_over_classes(std::span<const ScoredSet> per_class,
                          const std::function<double(const ScoredSet&)>& metric);

// One-vs-rest sets from a score matrix (scores[i][c]) and true class ids.
std::vector<ScoredSet> one_vs_rest(const std::vector<std::vector<double>>& scores,
                                   const std::vector<int>& truth, int num_classes);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
MeanStd seed_average(std::span<const double> runs);

}  // namespace predilect
