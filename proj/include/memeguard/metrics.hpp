#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace memeguard {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parallel scores and 0/1 labels.
struct ScoredLabels {
  std::vector<double> scores;
  std::vector<int> labels;

  /// Throws MetricError on length mismatch, empty input, or a label outside {0, 1}.
  void validate() const;
};

/// Area under the ROC curve as the Mann-Whitney statistic with ties
/// credited one half. Sort-based, O(n log n); the result is computed from
/// exact integer rank sums. Throws MetricError unless both classes appear.
double auroc(std::span<const double> scores, std::span<const int> labels);
double auroc(const ScoredLabels& data);

/// Fraction of examples with (score >= threshold) == label.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);
double accuracy(const ScoredLabels& data, double threshold = 0.5);

/// `metric,value` rows for auroc and acc.
std::string metrics_report_csv(const ScoredLabels& data, double threshold = 0.5);

}  // namespace memeguard
