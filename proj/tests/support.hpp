#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "memeguard/dataset.hpp"
#include "memeguard/fusion_model.hpp"
#include "memeguard/random_forest.hpp"
#include "memeguard/rng.hpp"
#include "memeguard/tags.hpp"

namespace oracle {

// Full-matrix Wagner-Fischer over bytes.
inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

// Every string over `alphabet` with length in [0, max_len].
inline std::vector<std::string> all_strings(const std::string& alphabet, std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (char c : alphabet) out.push_back(out[i] + c);
    }
    begin = end;
  }
  return out;
}

// Mann-Whitney by explicit pair counting, as doubled integer credit.
struct PairCount {
  std::uint64_t doubled_credit = 0;
  std::uint64_t pairs = 0;
  double value() const { return double(doubled_credit) / (2.0 * double(pairs)); }
};

inline PairCount auroc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  PairCount pc;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pc.pairs;
      if (s[i] > s[j]) pc.doubled_credit += 2;
      else if (s[i] == s[j]) pc.doubled_credit += 1;
    }
  }
  return pc;
}

inline double pearson(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Best root split by brute force: every feature, every threshold halfway
// between consecutive distinct values, Gini 1 - p0^2 - p1^2 weighted by
// child size. Returns (feature, threshold, impurity); feature -1 when no
// split lowers impurity or respects min_leaf.
struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

inline double gini_index(double c0, double c1) {
  const double n = c0 + c1;
  if (n == 0) return 0.0;
  return 1.0 - (c0 / n) * (c0 / n) - (c1 / n) * (c1 / n);
}

inline Split best_split(const memeguard::FeatureMatrix& x, const std::vector<int>& y, int min_leaf) {
  double p0 = 0, p1 = 0;
  for (int v : y) (v ? p1 : p0) += 1;
  const double n = double(y.size());
  Split best;
  best.impurity = gini_index(p0, p1);
  const double parent = best.impurity;
  for (std::size_t f = 0; f < x.cols; ++f) {
    std::vector<double> vals;
    for (std::size_t r = 0; r < x.rows; ++r) vals.push_back(x.at(r, f));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      double t = vals[k] + (vals[k + 1] - vals[k]) / 2.0;
      if (t >= vals[k + 1]) t = vals[k];
      double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (std::size_t r = 0; r < x.rows; ++r) {
        if (x.at(r, f) <= t) (y[r] ? l1 : l0) += 1;
        else (y[r] ? r1 : r0) += 1;
      }
      if (l0 + l1 < min_leaf || r0 + r1 < min_leaf) continue;
      const double imp = ((l0 + l1) * gini_index(l0, l1) + (r0 + r1) * gini_index(r0, r1)) / n;
      if (imp < best.impurity - 1e-12 && imp < parent - 1e-12) {
        best = {int(f), t, imp};
      }
    }
  }
  return best;
}

// Recursively compares every internal node with the exhaustive oracle on
// the rows that reach it.
inline void check_tree(const memeguard::DecisionTree& tree, std::size_t node, const memeguard::FeatureMatrix& x,
                               const std::vector<int>& y, int min_leaf, int& mismatches) {
  const auto& n = tree.nodes[node];
  const auto best = best_split(x, y, min_leaf);
  if (n.is_leaf()) {
    if (best.feature >= 0) ++mismatches;
    return;
  }
  if (best.feature < 0) {
    ++mismatches;
    return;
  }
  if (n.feature != best.feature || n.threshold != best.threshold) {
    // Accept an equal-impurity alternative.
    double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (x.at(r, std::size_t(n.feature)) <= n.threshold) (y[r] ? l1 : l0) += 1;
      else (y[r] ? r1 : r0) += 1;
    }
    const double imp =
        ((l0 + l1) * gini_index(l0, l1) + (r0 + r1) * gini_index(r0, r1)) / double(x.rows);
    if (std::abs(imp - best.impurity) > 1e-9) {
      ++mismatches;
      return;
    }
  }
  std::vector<std::size_t> left, right;
  for (std::size_t r = 0; r < x.rows; ++r) (x.at(r, std::size_t(n.feature)) <= n.threshold ? left : right).push_back(r);
  auto sub = [&](const std::vector<std::size_t>& idx, std::int32_t child) {
    std::vector<int> sy;
    for (auto i : idx) sy.push_back(y[i]);
    check_tree(tree, std::size_t(child), x.select_rows(idx), sy, min_leaf, mismatches);
  };
  sub(left, n.left);
  sub(right, n.right);
}

}  // namespace oracle

namespace fixtures {

inline memeguard::ModelConfig tiny_model(std::uint64_t seed = 5) {
  memeguard::ModelConfig m;
  m.vocab_size = 11;
  m.d_model = 8;
  m.n_layers = 1;
  m.n_heads = 2;
  m.d_ff = 16;
  m.max_text_len = 6;
  m.max_boxes = 3;
  m.region_dim = 6;
  m.dropout_rate = 0.0;
  m.seed = seed;
  return m;
}

inline memeguard::EncodedInput random_input(const memeguard::ModelConfig& cfg, memeguard::Rng& rng, int n_tokens,
                                            int n_boxes) {
  memeguard::EncodedInput in;
  for (int i = 0; i < n_tokens; ++i) in.tokens.push_back(2 + int(rng.below(std::uint64_t(cfg.vocab_size - 2))));
  in.regions = memeguard::Mat(n_boxes, cfg.region_dim);
  for (int r = 0; r < n_boxes; ++r) {
    for (int c = 0; c < cfg.region_dim; ++c) in.regions(r, c) = rng.normal();
  }
  return in;
}

// Max relative error between analytic gradients and central differences of
// the summed loss over `inputs`. Relative error per entry is
// |a - n| / max(|a|, |n|, floor).
inline double gradient_check(const memeguard::FusionModel& model, const std::vector<memeguard::EncodedInput>& inputs,
                             const std::vector<int>& labels, const memeguard::LossSpec& spec, double h = 1e-5,
                             double floor = 1e-6) {
  auto grads = model.zeros_like();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    model.accumulate_gradients(inputs[i], labels[i], spec, 1.0, grads, nullptr);
  }
  auto total_loss = [&](const memeguard::FusionModel& m) {
    double sum = 0.0;
    memeguard::ParamList scratch = m.zeros_like();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      sum += m.accumulate_gradients(inputs[i], labels[i], spec, 1.0, scratch, nullptr);
    }
    return sum;
  };
  memeguard::FusionModel probe = model;
  double worst = 0.0;
  for (std::size_t t = 0; t < probe.params().size(); ++t) {
    auto& p = probe.params()[t];
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double orig = p.data()[k];
      p.data()[k] = orig + h;
      const double up = total_loss(probe);
      p.data()[k] = orig - h;
      const double down = total_loss(probe);
      p.data()[k] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[t].data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

// Labeled memes whose tags reproduce an incidence table exactly: row
// counts[label][bucket] memes carry `bucket` distinct flags.
inline void build_incidence_mock(const std::uint64_t counts[2][5], std::vector<int>& labels,
                                 std::vector<memeguard::TagVector>& tags) {
  memeguard::Rng rng(99);
  for (int label = 0; label < 2; ++label) {
    for (int bucket = 0; bucket < 5; ++bucket) {
      for (std::uint64_t i = 0; i < counts[label][bucket]; ++i) {
        std::vector<std::size_t> cats{0, 1, 2, 3, 4, 5, 6};
        rng.shuffle(std::span(cats));
        memeguard::TagVector t;
        for (int k = 0; k < bucket; ++k) t.flags[cats[k]] = 1;
        labels.push_back(label);
        tags.push_back(t);
      }
    }
  }
}

// Split with ids [first, first + n) and deterministic text/labels by id.
inline memeguard::SplitSet id_split(std::uint64_t first, std::size_t n,
                                    memeguard::SplitName name = memeguard::SplitName::custom) {
  memeguard::SplitSet s;
  s.name = name;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t id = first + i;
    s.records.push_back({id, std::to_string(id) + ".png", "meme " + std::to_string(id), int(id % 3 == 0)});
  }
  return s;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("memeguard_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
