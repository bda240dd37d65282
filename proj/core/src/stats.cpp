#include "mcqpsy/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mcqpsy/error.hpp"

namespace mcqpsy::stats {

double mean(std::span<const double> values) {
  if (values.empty()) throw UndefinedStatisticError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw UndefinedStatisticError("correlation inputs differ in length (" +
                                  std::to_string(x.size()) + " vs " +
                                  std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw UndefinedStatisticError("correlation needs >= 2 points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw UndefinedStatisticError("correlation undefined: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double sorted_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw UndefinedStatisticError("quantile of an empty sample");
  if (prob < 0.0 || prob > 1.0) throw std::invalid_argument("quantile outside [0,1]");
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace mcqpsy::stats
