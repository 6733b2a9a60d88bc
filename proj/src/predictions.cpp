#include "memeguard/predictions.hpp"

#include <stdexcept>
#include <unordered_set>

namespace memeguard {

PredictionSet make_predictions(std::string model_name, const std::vector<std::uint64_t>& ids,
                               const std::vector<double>& probas, double threshold) {
  if (ids.size() != probas.size()) throw std::invalid_argument("ids and probabilities differ in length");
  PredictionSet set;
  set.model_name = std::move(model_name);
  set.rows.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    set.rows.push_back({ids[i], probas[i], probas[i] >= threshold ? 1 : 0});
  }
  return set;
}

std::string predictions_to_csv(const PredictionSet& set) {
  std::string out = "id,proba,label\n";
  for (const auto& r : set.rows) {
    out += std::to_string(r.id);
    out += ',';
    out += format_fixed(r.proba, 8);
    out += ',';
    if (r.label) out += std::to_string(*r.label);
    out += '\n';
  }
  return out;
}

PredictionSet predictions_from_csv(const CsvTable& csv, std::string model_name) {
  PredictionSet set;
  set.model_name = std::move(model_name);
  const auto id_col = csv.column("id");
  const auto p_col = csv.column("proba");
  std::optional<std::size_t> label_col;
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    if (csv.header[i] == "label") label_col = i;
  }
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const std::string where = set.model_name + " line " + std::to_string(csv.line_numbers[r]);
    PredictionSet::Row row;
    row.id = parse_id(csv.rows[r][id_col], where);
    row.proba = parse_real(csv.rows[r][p_col], where);
    if (!(row.proba >= 0.0 && row.proba <= 1.0)) throw std::runtime_error(where + ": proba outside [0, 1]");
    if (label_col && !csv.rows[r][*label_col].empty()) {
      const auto& cell = csv.rows[r][*label_col];
      if (cell != "0" && cell != "1") throw std::runtime_error(where + ": label must be 0 or 1");
      row.label = cell == "1";
    }
    if (!seen.insert(row.id).second) throw std::runtime_error(where + ": duplicate id " + std::to_string(row.id));
    set.rows.push_back(row);
  }
  return set;
}

PredictionSet load_predictions(const std::filesystem::path& path) {
  return predictions_from_csv(read_csv(path), path.stem().string());
}

}  // namespace memeguard
