#include "memeguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "memeguard/csv.hpp"

namespace memeguard {

namespace {

void check(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
  if (scores.empty()) throw MetricError("metric needs at least one example");
  for (int y : labels) {
    if (y != 0 && y != 1) throw MetricError("labels must be 0 or 1");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw MetricError("scores must be finite");
  }
}

}  // namespace

void ScoredLabels::validate() const { check(scores, labels); }

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the positive rank sum: a tie block over 1-based ranks [lo, hi]
  // gives every member the average rank (lo + hi) / 2.
  std::uint64_t twice_rank_sum = 0;
  std::uint64_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    std::uint64_t pos_in_block = 0;
    for (std::size_t t = i; t <= j; ++t) pos_in_block += static_cast<std::uint64_t>(labels[order[t]]);
    twice_rank_sum += pos_in_block * static_cast<std::uint64_t>((i + 1) + (j + 1));
    n_pos += pos_in_block;
    i = j + 1;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("AUROC needs both classes present");
  // 2U = 2R - n_pos (n_pos + 1)
  const std::uint64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * n_pos * n_neg);
}

double auroc(const ScoredLabels& data) { return auroc(data.scores, data.labels); }

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check(scores, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    correct += static_cast<int>(scores[i] >= threshold) == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double accuracy(const ScoredLabels& data, double threshold) {
  return accuracy(data.scores, data.labels, threshold);
}

std::string metrics_report_csv(const ScoredLabels& data, double threshold) {
  std::string out = "metric,value\n";
  out += "auroc," + format_fixed(auroc(data), 6) + "\n";
  out += "acc," + format_fixed(accuracy(data, threshold), 6) + "\n";
  return out;
}

}  // namespace memeguard
