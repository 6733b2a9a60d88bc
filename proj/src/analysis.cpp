#include "memeguard/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "memeguard/csv.hpp"

namespace memeguard {

std::optional<double> phi(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("phi: vectors differ in length");
  if (a.size() < 2) throw std::invalid_argument("phi: need at least 2 observations");
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    if (x && y) ++n11;
    else if (x) ++n10;
    else if (y) ++n01;
    else ++n00;
  }
  const double a1 = n11 + n10, a0 = n01 + n00, b1 = n11 + n01, b0 = n10 + n00;
  if (a1 == 0 || a0 == 0 || b1 == 0 || b0 == 0) return std::nullopt;
  const double r = (n11 * n00 - n10 * n01) / std::sqrt(a1 * a0 * b1 * b0);
  return std::clamp(r, -1.0, 1.0);
}

std::uint64_t IncidenceTable::total() const { return row_total(0) + row_total(1); }

std::uint64_t IncidenceTable::row_total(int label) const {
  std::uint64_t s = 0;
  for (auto c : counts[static_cast<std::size_t>(label)]) s += c;
  return s;
}

std::uint64_t IncidenceTable::column_total(std::size_t bucket) const {
  return counts[0][bucket] + counts[1][bucket];
}

std::optional<double> IncidenceTable::hateful_share(std::size_t bucket) const {
  const auto n = column_total(bucket);
  if (n == 0) return std::nullopt;
  return static_cast<double>(counts[1][bucket]) / static_cast<double>(n);
}

IncidenceTable incidence(std::span<const int> labels, std::span<const TagVector> tags) {
  if (labels.size() != tags.size()) throw std::invalid_argument("incidence: labels and tags differ in length");
  IncidenceTable t;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("incidence: labels must be 0 or 1");
    const auto bucket = std::min<std::size_t>(static_cast<std::size_t>(tags[i].category_count()),
                                              IncidenceTable::kBuckets - 1);
    ++t.counts[static_cast<std::size_t>(labels[i])][bucket];
  }
  return t;
}

std::array<std::string, CorrelationMatrix::kSize> CorrelationMatrix::names() {
  std::array<std::string, kSize> out;
  out[0] = "label";
  for (std::size_t c = 0; c < kNumCategories; ++c) out[c + 1] = std::string(kCategoryNames[c]);
  return out;
}

CorrelationMatrix correlation(std::span<const int> labels, std::span<const TagVector> tags) {
  if (labels.size() != tags.size()) throw std::invalid_argument("correlation: labels and tags differ in length");
  constexpr auto k = CorrelationMatrix::kSize;
  std::array<std::vector<int>, k> cols;
  cols[0].assign(labels.begin(), labels.end());
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    cols[c + 1].reserve(tags.size());
    for (const auto& t : tags) cols[c + 1].push_back(t.flags[c]);
  }
  CorrelationMatrix m;
  if (labels.size() < 2) return m;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      auto v = phi(cols[i], cols[j]);
      if (i == j && v) v = 1.0;
      m.cells[i][j] = v;
      m.cells[j][i] = v;
    }
  }
  return m;
}

AnalysisReport report(const IncidenceTable& inc, const CorrelationMatrix& corr) {
  AnalysisReport r;
  r.incidence_csv = "label,0,1,2,3,4+\n";
  for (int label : {0, 1}) {
    r.incidence_csv += label ? "true" : "false";
    for (auto c : inc.counts[static_cast<std::size_t>(label)]) r.incidence_csv += "," + std::to_string(c);
    r.incidence_csv += "\n";
  }

  const auto names = CorrelationMatrix::names();
  auto cell = [&](std::size_t i, std::size_t j) {
    const auto& v = corr.cells[i][j];
    return v ? format_fixed(*v, 3) : std::string("NA");
  };
  r.correlation_csv = "variable";
  for (const auto& n : names) r.correlation_csv += "," + n;
  r.correlation_csv += "\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    r.correlation_csv += names[i];
    for (std::size_t j = 0; j < names.size(); ++j) r.correlation_csv += "," + cell(i, j);
    r.correlation_csv += "\n";
  }

  std::string& t = r.text;
  t += "Sensitive-category incidence (rows: label, columns: categories present)\n";
  t += r.incidence_csv;
  t += "\nHateful share by category count\n";
  const char* bucket_names[] = {"0", "1", "2", "3", "4+"};
  for (std::size_t b = 0; b < IncidenceTable::kBuckets; ++b) {
    const auto share = inc.hateful_share(b);
    t += std::string(bucket_names[b]) + ": " + (share ? format_fixed(100.0 * *share, 2) + "%" : std::string("NA")) +
         " (" + std::to_string(inc.counts[1][b]) + "/" + std::to_string(inc.column_total(b)) + ")\n";
  }
  t += "\nPhi correlation with the hateful label\n";
  for (std::size_t j = 1; j < names.size(); ++j) t += names[j] + ": " + cell(0, j) + "\n";
  t += "\nFull correlation matrix\n";
  t += r.correlation_csv;
  return r;
}

}  // namespace memeguard
