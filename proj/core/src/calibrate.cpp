#include "mcqpsy/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mcqpsy/analysis.hpp"
#include "mcqpsy/error.hpp"

namespace mcqpsy {

using nlohmann::json;

json calibration_to_json(const CalibrationResult& r) {
  return {{"model_id", r.model_id},
          {"dataset_id", r.subset.dataset_id},
          {"subject", r.subset.subject},
          {"level", r.subset.level},
          {"temperature", r.temperature},
          {"mean_kl_before", r.mean_kl_before},
          {"mean_kl_after", r.mean_kl_after},
          {"n_items", r.n_items}};
}

CalibrationResult calibration_from_json(const json& record) {
  try {
    CalibrationResult r;
    r.model_id = record.at("model_id").get<std::string>();
    r.subset = {record.at("dataset_id").get<std::string>(),
                record.at("subject").get<std::string>(),
                record.at("level").get<std::string>()};
    r.temperature = record.at("temperature").get<double>();
    r.mean_kl_before = record.at("mean_kl_before").get<double>();
    r.mean_kl_after = record.at("mean_kl_after").get<double>();
    r.n_items = record.at("n_items").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("calibration record: ") + e.what(), 0);
  }
}

OptionScores softmax(const OptionScores& logits, double temperature) {
  double top = *std::max_element(logits.begin(), logits.end());
  OptionScores out{};
  double total = 0.0;
  for (std::size_t k = 0; k < kNumOptions; ++k) {
    out[k] = std::exp((logits[k] - top) / temperature);
    total += out[k];
  }
  for (double& p : out) p /= total;
  return out;
}

ResponseDistribution scaled_distribution(const ModelResponse& response,
                                         double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be a positive finite number");
  }
  OptionScores mean{};
  for (const auto& run : response.runs) {
    OptionScores p = softmax(unpermute(run), temperature);
    for (std::size_t k = 0; k < kNumOptions; ++k) mean[k] += p[k];
  }
  double total = 0.0;
  for (double& p : mean) {
    p /= static_cast<double>(kNumOptions);
    total += p;
  }
  // Keep the simplex sum exact against rounding drift.
  for (double& p : mean) p /= total;
  return ResponseDistribution(mean);
}

std::vector<double> per_item_kl(std::span<const ItemResponse> items,
                                double temperature) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& pair : items) {
    if (!pair.item->human_dist) {
      throw Error("item '" + pair.item->item_id + "' has no human distribution");
    }
    out.push_back(kl_divergence(*pair.item->human_dist,
                                scaled_distribution(*pair.response, temperature)));
  }
  return out;
}

double mean_kl(std::span<const ItemResponse> items, double temperature) {
  if (items.empty()) throw Error("mean KL over an empty item list");
  auto kls = per_item_kl(items, temperature);
  return std::accumulate(kls.begin(), kls.end(), 0.0) /
         static_cast<double>(kls.size());
}

CalibrationResult optimize_temperature(std::span<const ItemResponse> items,
                                       const TemperatureSearch& search) {
  if (items.empty()) throw Error("cannot calibrate on an empty item list");
  if (search.grid_points < 3) throw std::invalid_argument("grid needs >= 3 points");

  const double lo = std::log(kMinTemperature);
  const double hi = std::log(kMaxTemperature);
  // Very small temperatures can underflow distractor mass to exactly zero;
  // such points are simply infeasible for the search.
  auto objective = [&](double log_t) {
    try {
      return mean_kl(items, std::exp(log_t));
    } catch (const InfiniteDivergenceError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const std::size_t n = search.grid_points;
  auto grid_at = [&](std::size_t i) {
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::size_t best = 0;
  double best_value = objective(grid_at(0));
  for (std::size_t i = 1; i < n; ++i) {
    double v = objective(grid_at(i));
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }

  // Golden-section on the grid cell pair around the best pre-scan point.
  double a = grid_at(best == 0 ? 0 : best - 1);
  double b = grid_at(std::min(best + 1, n - 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (b - a > search.log_tolerance) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = objective(x2);
    }
  }

  double best_log_t = grid_at(best);
  if (f1 < best_value) {
    best_value = f1;
    best_log_t = x1;
  }
  if (f2 < best_value) {
    best_value = f2;
    best_log_t = x2;
  }

  CalibrationResult result;
  result.model_id = items.front().response->model_id;
  result.subset = items.front().item->subset;
  result.n_items = items.size();
  result.mean_kl_before = mean_kl(items, 1.0);
  result.temperature = std::clamp(std::exp(best_log_t), kMinTemperature, kMaxTemperature);
  result.mean_kl_after = mean_kl(items, result.temperature);
  if (result.mean_kl_before < result.mean_kl_after) {
    result.temperature = 1.0;
    result.mean_kl_after = result.mean_kl_before;
  }
  return result;
}

}  // namespace mcqpsy
