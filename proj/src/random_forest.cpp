#include "memeguard/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "memeguard/binary_io.hpp"
#include "memeguard/rng.hpp"

namespace memeguard {

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.rows = indices.size();
  out.cols = cols;
  out.column_names = column_names;
  out.values.reserve(indices.size() * cols);
  for (auto r : indices) {
    auto src = row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

void RFConfig::validate() const {
  if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (features_per_split && *features_per_split < 1) {
    throw std::invalid_argument("features_per_split must be >= 1");
  }
}

int RFConfig::resolved_features_per_split(std::size_t n_features) const {
  const int p = static_cast<int>(n_features);
  if (features_per_split) return std::min(*features_per_split, p);
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
}

double weighted_gini(double count0, double count1) {
  const double n = count0 + count1;
  if (n == 0.0) return 0.0;
  return n - (count0 * count0 + count1 * count1) / n;
}

std::size_t DecisionTree::leaf_index(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

double DecisionTree::predict(std::span<const double> row) const {
  return nodes[leaf_index(row)].positive_rate();
}

namespace {

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const FeatureMatrix& x, std::span<const int> y, const RFConfig& cfg, Rng& rng)
      : x_(x), y_(y), cfg_(cfg), rng_(rng), mtry_(cfg.resolved_features_per_split(x.cols)) {}

  DecisionTree grow(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    build(std::move(samples), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t build(std::vector<std::size_t> samples, int depth) {
    TreeNode node;
    for (auto s : samples) (y_[s] ? node.count1 : node.count0)++;
    const auto index = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back(node);

    const auto msl = static_cast<std::size_t>(cfg_.min_samples_leaf);
    const bool pure = node.count0 == 0 || node.count1 == 0;
    if (depth >= cfg_.max_depth || pure || samples.size() < 2 * msl) return index;

    auto split = best_split(samples);
    if (!split) return index;

    std::vector<std::size_t> left, right;
    for (auto s : samples) {
      (x_.at(s, split->feature) <= split->threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const auto l = build(std::move(left), depth + 1);
    const auto r = build(std::move(right), depth + 1);
    auto& n = tree_.nodes[static_cast<std::size_t>(index)];
    n.feature = static_cast<std::int32_t>(split->feature);
    n.threshold = split->threshold;
    n.left = l;
    n.right = r;
    return index;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> all(x_.cols);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (static_cast<std::size_t>(mtry_) >= all.size()) return all;
    // Partial Fisher-Yates, then ascending so ties resolve by feature index.
    for (std::size_t i = 0; i < static_cast<std::size_t>(mtry_); ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(all.size() - i));
      std::swap(all[i], all[j]);
    }
    all.resize(static_cast<std::size_t>(mtry_));
    std::sort(all.begin(), all.end());
    return all;
  }

  std::optional<Split> best_split(const std::vector<std::size_t>& samples) {
    double n0 = 0, n1 = 0;
    for (auto s : samples) (y_[s] ? n1 : n0) += 1;
    const double parent = weighted_gini(n0, n1);
    const double n = n0 + n1;
    const auto msl = static_cast<std::size_t>(cfg_.min_samples_leaf);

    std::optional<Split> best;
    std::vector<std::size_t> order(samples);
    for (auto f : candidate_features()) {
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return x_.at(a, f) < x_.at(b, f); });
      double l0 = 0, l1 = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        (y_[order[i]] ? l1 : l0) += 1;
        const double lo = x_.at(order[i], f);
        const double hi = x_.at(order[i + 1], f);
        if (lo == hi) continue;
        const std::size_t n_left = i + 1;
        if (n_left < msl || order.size() - n_left < msl) continue;
        const double imp = weighted_gini(l0, l1) + weighted_gini(n0 - l0, n1 - l1);
        if (!(imp < parent - kMinImpurityDecrease * n)) continue;
        if (!best || imp < best->impurity) {
          double thr = lo + (hi - lo) / 2.0;
          if (!(thr < hi)) thr = lo;
          best = Split{f, thr, imp};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  const RFConfig& cfg_;
  Rng& rng_;
  int mtry_;
  DecisionTree tree_;
};

}  // namespace

Forest rf_train(const FeatureMatrix& x, std::span<const int> y, const RFConfig& cfg) {
  cfg.validate();
  if (x.rows == 0 || x.cols == 0) throw std::invalid_argument("rf_train: empty features");
  if (y.size() != x.rows) throw std::invalid_argument("rf_train: label count does not match rows");
  if (x.rows < 2) throw std::invalid_argument("rf_train: need at least 2 rows");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw std::invalid_argument("rf_train: labels must be 0 or 1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw std::invalid_argument("rf_train: labels contain a single class");

  Forest forest;
  forest.schema = x.column_names;
  forest.trees.reserve(static_cast<std::size_t>(cfg.n_trees));
  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> samples(x.rows);
    if (cfg.bootstrap) {
      for (auto& s : samples) s = static_cast<std::size_t>(rng.below(x.rows));
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    TreeGrower grower(x, y, cfg, rng);
    forest.trees.push_back(grower.grow(std::move(samples)));
  }
  return forest;
}

std::vector<double> rf_predict(const Forest& forest, const FeatureMatrix& x) {
  if (x.cols != forest.schema.size() || x.column_names != forest.schema) {
    throw std::invalid_argument("rf_predict: feature schema does not match the forest");
  }
  std::vector<double> out(x.rows, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double sum = 0.0;
    for (const auto& t : forest.trees) sum += t.predict(x.row(r));
    out[r] = sum / static_cast<double>(forest.trees.size());
  }
  return out;
}

std::vector<std::byte> encode_forest(const Forest& forest) {
  ByteWriter out;
  out.magic("RFF1");
  out.u32(static_cast<std::uint32_t>(forest.schema.size()));
  for (const auto& name : forest.schema) {
    out.u32(static_cast<std::uint32_t>(name.size()));
    out.raw(name);
  }
  out.u32(static_cast<std::uint32_t>(forest.trees.size()));
  for (const auto& t : forest.trees) {
    out.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      out.i32(n.feature);
      out.f64(n.threshold);
      out.i32(n.left);
      out.i32(n.right);
      out.u32(n.count0);
      out.u32(n.count1);
    }
  }
  return out.bytes();
}

Forest decode_forest(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  in.expect_magic("RFF1");
  Forest forest;
  const auto n_cols = in.u32();
  for (std::uint32_t c = 0; c < n_cols; ++c) {
    const auto len = in.u32();
    forest.schema.push_back(in.raw(len));
  }
  const auto n_trees = in.u32();
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    DecisionTree tree;
    const auto n_nodes = in.u32();
    for (std::uint32_t i = 0; i < n_nodes; ++i) {
      TreeNode n;
      n.feature = in.i32();
      n.threshold = in.f64();
      n.left = in.i32();
      n.right = in.i32();
      n.count0 = in.u32();
      n.count1 = in.u32();
      if (!n.is_leaf() && (n.feature >= static_cast<std::int32_t>(n_cols) || n.left <= 0 ||
                           n.right <= 0 || n.left >= static_cast<std::int32_t>(n_nodes) ||
                           n.right >= static_cast<std::int32_t>(n_nodes))) {
        throw FormatError("RFF1 node references out of range");
      }
      tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) throw FormatError("RFF1 tree without nodes");
    forest.trees.push_back(std::move(tree));
  }
  if (in.remaining() != 0) throw FormatError("RFF1 has trailing bytes");
  return forest;
}

}  // namespace memeguard
