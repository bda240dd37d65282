#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcqpsy/collector.hpp"
#include "mcqpsy/itembank.hpp"

namespace mcqpsy {

// Non-owning pairing of an item with one model's response to it.
struct ItemResponse {
  const Item* item = nullptr;
  const ModelResponse* response = nullptr;
};

// Temperature search interval (inclusive).
inline constexpr double kMinTemperature = 1e-2;
inline constexpr double kMaxTemperature = 1e3;

struct CalibrationResult {
  std::string model_id;
  SubsetKey subset;
  double temperature = 1.0;
  double mean_kl_before = 0.0;  // at T = 1
  double mean_kl_after = 0.0;
  std::size_t n_items = 0;
};

nlohmann::json calibration_to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const nlohmann::json& record);

// Numerically stable softmax of logits / temperature.
OptionScores softmax(const OptionScores& logits, double temperature = 1.0);

// Per run: unpermute, softmax(logits / T); then the entrywise mean of the four
// probability vectors. Throws std::invalid_argument for T <= 0 or non-finite T.
ResponseDistribution scaled_distribution(const ModelResponse& response,
                                         double temperature);

// Unweighted mean over items of KL(human || scaled model). Throws Error on an
// empty list or an item without a human distribution.
double mean_kl(std::span<const ItemResponse> items, double temperature);

// Per-item KL(human || scaled model) at one temperature, in input order.
std::vector<double> per_item_kl(std::span<const ItemResponse> items,
                                double temperature);

struct TemperatureSearch {
  std::size_t grid_points = 2000;
  double log_tolerance = 1e-10;
};

// Temperature on [1e-2, 1e3] minimizing mean_kl: log-spaced grid pre-scan to
// bracket the global minimum, then golden-section refinement in log T. The
// result never does worse than T = 1.
CalibrationResult optimize_temperature(std::span<const ItemResponse> items,
                                       const TemperatureSearch& search = {});

}  // namespace mcqpsy
