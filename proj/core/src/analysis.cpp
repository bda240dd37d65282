#include "mcqpsy/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "mcqpsy/error.hpp"
#include "mcqpsy/psychometrics.hpp"
#include "mcqpsy/stats.hpp"

namespace mcqpsy {

double kl_divergence(const ResponseDistribution& p, const ResponseDistribution& q) {
  double total = 0.0;
  for (std::size_t k = 0; k < kNumOptions; ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) {
      throw InfiniteDivergenceError("KL divergence is infinite: q[" +
                                    std::to_string(k) + "] = 0 where p > 0");
    }
    total += p[k] * std::log(p[k] / q[k]);
  }
  // Rounding can leave a tiny negative sum for p == q up to ulps.
  return std::max(total, 0.0);
}

PearsonResult pearson_r_p(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw UndefinedStatisticError("correlation inputs differ in length");
  }
  if (x.size() < 3) throw UndefinedStatisticError("correlation needs n >= 3");
  PearsonResult out;
  out.n = x.size();
  out.r = stats::pearson_r(x, y);
  const double df = static_cast<double>(out.n - 2);
  const double one_minus_r2 = 1.0 - out.r * out.r;
  if (one_minus_r2 <= 0.0) {
    out.p_value = 0.0;
    return out;
  }
  const double t = out.r * std::sqrt(df / one_minus_r2);
  boost::math::students_t dist(df);
  out.p_value = std::clamp(
      2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
  return out;
}

BootstrapInterval bootstrap_ci(std::size_t n_items, const ResampleStatistic& statistic,
                               const BootstrapOptions& options) {
  if (n_items < 2) throw UndefinedStatisticError("bootstrap needs at least 2 items");
  if (options.n_resamples == 0) throw std::invalid_argument("n_resamples must be > 0");
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw std::invalid_argument("confidence level must lie in (0, 1)");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n_items - 1);
  std::vector<std::size_t> indices(n_items);
  std::vector<double> stats;
  stats.reserve(options.n_resamples);
  for (std::size_t b = 0; b < options.n_resamples; ++b) {
    for (auto& idx : indices) idx = pick(rng);
    try {
      stats.push_back(statistic(indices));
    } catch (const UndefinedStatisticError&) {
      // Degenerate resample (e.g. zero variance); skip it.
    }
  }
  if (stats.empty()) {
    throw UndefinedStatisticError("statistic undefined on every bootstrap resample");
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - options.level) / 2.0;
  return {stats::sorted_quantile(stats, tail), stats::sorted_quantile(stats, 1.0 - tail),
          stats.size()};
}

BootstrapInterval bootstrap_mean_ci(std::span<const double> values,
                                    const BootstrapOptions& options) {
  return bootstrap_ci(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        double total = 0.0;
        for (std::size_t i : idx) total += values[i];
        return total / static_cast<double>(idx.size());
      },
      options);
}

namespace {

// Percentile intervals can exclude the point estimate for skewed statistics;
// reported intervals always cover it.
void attach_interval(MetricValue& metric, const BootstrapInterval& ci) {
  metric.ci_low = std::min(ci.low, metric.value);
  metric.ci_high = std::max(ci.high, metric.value);
}

}  // namespace

MetricValue mean_metric(std::span<const double> values, const BootstrapOptions& options) {
  MetricValue metric;
  metric.value = stats::mean(values);
  metric.n = values.size();
  if (values.size() >= 2) attach_interval(metric, bootstrap_mean_ci(values, options));
  return metric;
}

MetricValue correlation_metric(std::span<const double> x, std::span<const double> y,
                               const BootstrapOptions& options) {
  PearsonResult pr = pearson_r_p(x, y);
  MetricValue metric;
  metric.value = pr.r;
  metric.n = pr.n;
  metric.p_value = pr.p_value;
  std::vector<double> rx(x.size()), ry(y.size());
  try {
    auto ci = bootstrap_ci(
        x.size(),
        [&](std::span<const std::size_t> idx) {
          for (std::size_t j = 0; j < idx.size(); ++j) {
            rx[j] = x[idx[j]];
            ry[j] = y[idx[j]];
          }
          return stats::pearson_r(rx, ry);
        },
        options);
    attach_interval(metric, ci);
  } catch (const UndefinedStatisticError&) {
    // Point estimate stands without an interval.
  }
  return metric;
}

Argmax argmax_lowest(const ResponseDistribution& dist) {
  Argmax out;
  for (int k = 1; k < static_cast<int>(kNumOptions); ++k) {
    if (dist[k] > dist[out.index]) out.index = k;
  }
  for (int k = 0; k < static_cast<int>(kNumOptions); ++k) {
    if (k != out.index && dist[k] == dist[out.index]) out.tied = true;
  }
  return out;
}

ModeAccuracy mode_accuracy(std::span<const ItemDistribution> pairs) {
  if (pairs.empty()) throw Error("mode accuracy over an empty item list");
  ModeAccuracy out;
  out.n = pairs.size();
  for (const auto& pair : pairs) {
    Argmax top = argmax_lowest(pair.dist);
    out.ties += top.tied;
    out.hits.push_back(top.index == pair.item->correct_index ? 1.0 : 0.0);
  }
  out.value = stats::mean(out.hits);
  return out;
}

double correct_option_probability(const ItemResponse& pair, double temperature) {
  return scaled_distribution(*pair.response, temperature)[pair.item->correct_index];
}

MetricValue ctt_facility_correlation(std::span<const ItemResponse> items,
                                     double temperature,
                                     const BootstrapOptions& options) {
  std::vector<double> facility, model;
  for (const auto& pair : items) {
    if (!pair.item->human_dist) {
      throw Error("item '" + pair.item->item_id + "' has no human distribution");
    }
    facility.push_back(item_facility(*pair.item->human_dist, pair.item->correct_index));
    model.push_back(correct_option_probability(pair, temperature));
  }
  return correlation_metric(facility, model, options);
}

MetricValue irt_expected_correlation(std::span<const ItemResponse> items,
                                     const std::string& scale_id,
                                     std::span<const double> temperatures,
                                     const BootstrapOptions& options) {
  if (temperatures.size() != 1 && temperatures.size() != items.size()) {
    throw std::invalid_argument("need one temperature or one per item");
  }
  std::vector<double> expected, model;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const IrtItemParams* params = items[i].item->irt_for_scale(scale_id);
    if (params == nullptr) {
      throw Error("item '" + items[i].item->item_id + "' has no parameters on scale '" +
                  scale_id + "'");
    }
    expected.push_back(expected_prob_theta0(*params));
    double t = temperatures.size() == 1 ? temperatures[0] : temperatures[i];
    model.push_back(correct_option_probability(items[i], t));
  }
  return correlation_metric(expected, model, options);
}

MetricValue irt_expected_correlation(std::span<const ItemResponse> items,
                                     const std::string& scale_id, double temperature,
                                     const BootstrapOptions& options) {
  const double t[] = {temperature};
  return irt_expected_correlation(items, scale_id, t, options);
}

MetricValue human_upper_bound(std::span<const Item* const> items,
                              const std::string& scale_id,
                              const BootstrapOptions& options) {
  std::vector<double> facility, expected;
  for (const Item* item : items) {
    const IrtItemParams* params = item->irt_for_scale(scale_id);
    if (!item->human_dist || params == nullptr) {
      throw Error("item '" + item->item_id +
                  "' needs a human distribution and parameters on scale '" + scale_id +
                  "'");
    }
    facility.push_back(item_facility(*item->human_dist, item->correct_index));
    expected.push_back(expected_prob_theta0(*params));
  }
  return correlation_metric(facility, expected, options);
}

namespace {

ModelResponse baseline_response(const Item& item, const std::string& model_id,
                                const OptionScores& canonical_logits) {
  ModelResponse response;
  response.item_id = item.item_id;
  response.model_id = model_id;
  response.source = ResponseSource::kBuiltin;
  auto perms = cyclic_permutations();
  for (std::size_t r = 0; r < kNumOptions; ++r) {
    response.runs[r] = {perms[r], permute(canonical_logits, perms[r])};
  }
  return response;
}

}  // namespace

ModelResponse uniform_baseline(const Item& item) {
  return baseline_response(item, kUniformBaselineId, {0.0, 0.0, 0.0, 0.0});
}

ModelResponse oracle_baseline(const Item& item) {
  OptionScores logits{0.0, 0.0, 0.0, 0.0};
  logits.at(static_cast<std::size_t>(item.correct_index)) = 1.0;
  return baseline_response(item, kOracleBaselineId, logits);
}

CorrelationMatrix correlation_matrix(std::span<const CorrectProbSeries> series) {
  CorrelationMatrix out;
  if (series.empty()) return out;
  std::set<std::string> common;
  for (const auto& [id, _] : series.front().by_item) common.insert(id);
  for (const auto& s : series.subspan(1)) {
    std::erase_if(common, [&](const std::string& id) { return !s.by_item.contains(id); });
  }
  if (common.size() < 3) {
    throw UndefinedStatisticError("model-model matrix needs >= 3 commonly covered items, found " +
                                  std::to_string(common.size()));
  }
  out.item_ids.assign(common.begin(), common.end());
  const std::size_t m = series.size();
  std::vector<std::vector<double>> values(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.names.push_back(series[i].name);
    for (const auto& id : out.item_ids) values[i].push_back(series[i].by_item.at(id));
  }
  // A constant series has no defined correlation, not even with itself.
  std::vector<bool> constant(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto [lo, hi] = std::minmax_element(values[i].begin(), values[i].end());
    constant[i] = *lo == *hi;
  }
  out.r.assign(m, std::vector<std::optional<double>>(m));
  for (std::size_t i = 0; i < m; ++i) {
    if (constant[i]) continue;
    out.r[i][i] = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (constant[j]) continue;
      double r = stats::pearson_r(values[i], values[j]);
      out.r[i][j] = r;
      out.r[j][i] = r;
    }
  }
  return out;
}

CorrelationMatrix model_model_matrix(std::span<const ModelSeriesInput> models) {
  std::vector<CorrectProbSeries> series;
  for (const auto& model : models) {
    CorrectProbSeries s{model.model_id, {}};
    for (const auto& pair : model.items) {
      s.by_item[pair.item->item_id] = correct_option_probability(pair, model.temperature);
    }
    series.push_back(std::move(s));
  }
  return correlation_matrix(series);
}

}  // namespace mcqpsy
