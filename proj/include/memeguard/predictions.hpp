#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memeguard/csv.hpp"

namespace memeguard {

/// Per-meme probability of the hateful class from one model.
struct PredictionSet {
  struct Row {
    std::uint64_t id = 0;
    double proba = 0.0;
    std::optional<int> label;  // thresholded prediction
  };

  std::string model_name;
  std::vector<Row> rows;

  std::size_t size() const { return rows.size(); }
};

/// Label column filled with (proba >= threshold).
PredictionSet make_predictions(std::string model_name, const std::vector<std::uint64_t>& ids,
                               const std::vector<double>& probas, double threshold = 0.5);

/// `id,proba,label`, proba with 8 decimals.
std::string predictions_to_csv(const PredictionSet& set);
PredictionSet predictions_from_csv(const CsvTable& csv, std::string model_name);
PredictionSet load_predictions(const std::filesystem::path& path);

}  // namespace memeguard
