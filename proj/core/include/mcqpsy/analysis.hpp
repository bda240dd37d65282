#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcqpsy/calibrate.hpp"
#include "mcqpsy/collector.hpp"
#include "mcqpsy/itembank.hpp"

namespace mcqpsy {

// KL(p || q) in nats with 0 ln 0 = 0. Throws InfiniteDivergenceError when q
// has a zero where p does not.
double kl_divergence(const ResponseDistribution& p, const ResponseDistribution& q);

struct PearsonResult {
  double r = 0.0;
  double p_value = 1.0;  // two-tailed, t distribution with n - 2 df
  std::size_t n = 0;
};

// Throws UndefinedStatisticError on length mismatch, n < 3 or zero variance.
PearsonResult pearson_r_p(std::span<const double> x, std::span<const double> y);

struct BootstrapOptions {
  std::size_t n_resamples = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct BootstrapInterval {
  double low = 0.0;
  double high = 0.0;
  // Resamples on which the statistic was defined.
  std::size_t n_valid = 0;
};

// Statistic over a resample, given as indices into the original items.
// May throw UndefinedStatisticError; such resamples are dropped.
using ResampleStatistic = std::function<double(std::span<const std::size_t>)>;

// Percentile bootstrap over items. Resample b draws n indices uniformly with
// replacement from one std::mt19937_64 stream seeded with `options.seed`.
// Throws UndefinedStatisticError with fewer than 2 items or when no resample
// yields a defined statistic.
BootstrapInterval bootstrap_ci(std::size_t n_items, const ResampleStatistic& statistic,
                               const BootstrapOptions& options);

// Mean of per-item values.
BootstrapInterval bootstrap_mean_ci(std::span<const double> values,
                                    const BootstrapOptions& options);

struct MetricValue {
  double value = 0.0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::size_t n = 0;
  std::optional<double> p_value;
};

// Mean of `values` with a bootstrap CI.
MetricValue mean_metric(std::span<const double> values, const BootstrapOptions& options);

// Pearson r with two-tailed p and an item-level bootstrap CI of r.
MetricValue correlation_metric(std::span<const double> x, std::span<const double> y,
                               const BootstrapOptions& options);

struct ItemDistribution {
  const Item* item = nullptr;
  ResponseDistribution dist;
};

struct Argmax {
  int index = 0;
  bool tied = false;
};

// Lowest index among the maxima; `tied` when more than one entry is maximal.
Argmax argmax_lowest(const ResponseDistribution& dist);

struct ModeAccuracy {
  double value = 0.0;
  std::size_t n = 0;
  std::size_t ties = 0;
  // Per-item 0/1 hits, for bootstrapping.
  std::vector<double> hits;
};

// Fraction of items whose argmax (ties to the lowest index) is the correct
// option. Throws Error on an empty list.
ModeAccuracy mode_accuracy(std::span<const ItemDistribution> pairs);

// Scaled model probability on the item's correct option.
double correct_option_probability(const ItemResponse& pair, double temperature);

// x = human item facility, y = model correct-option probability at T.
MetricValue ctt_facility_correlation(std::span<const ItemResponse> items,
                                     double temperature,
                                     const BootstrapOptions& options);

// x = expected correct probability at theta = 0 on `scale_id`, y = model
// correct-option probability. `temperatures` is either one value for all items
// or one per item.
MetricValue irt_expected_correlation(std::span<const ItemResponse> items,
                                     const std::string& scale_id,
                                     std::span<const double> temperatures,
                                     const BootstrapOptions& options);
MetricValue irt_expected_correlation(std::span<const ItemResponse> items,
                                     const std::string& scale_id, double temperature,
                                     const BootstrapOptions& options);

// Human facility against the 3PL expectation at theta = 0 on `scale_id`.
MetricValue human_upper_bound(std::span<const Item* const> items,
                              const std::string& scale_id,
                              const BootstrapOptions& options);

inline constexpr char kUniformBaselineId[] = "UniformBaseline";
inline constexpr char kOracleBaselineId[] = "OracleBaseline";
inline constexpr char kHumanId[] = "Human";

// Four cyclic runs of all-zero logits: uniform at every temperature.
ModelResponse uniform_baseline(const Item& item);

// Four cyclic runs with logit 1 on the correct option and 0 elsewhere;
// calibration then fixes the shared correct-option probability per subset.
ModelResponse oracle_baseline(const Item& item);

// Per-item correct-option probabilities of one participant (model or human).
struct CorrectProbSeries {
  std::string name;
  std::map<std::string, double> by_item;
};

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::string> item_ids;  // common coverage used for every cell
  // Undefined cells (zero variance) are empty.
  std::vector<std::vector<std::optional<double>>> r;
};

// Pairwise Pearson r over the items covered by every series. Symmetric with a
// unit diagonal. Throws UndefinedStatisticError if fewer than 3 items are
// covered by all series.
CorrelationMatrix correlation_matrix(std::span<const CorrectProbSeries> series);

struct ModelSeriesInput {
  std::string model_id;
  std::span<const ItemResponse> items;
  double temperature = 1.0;
};

CorrelationMatrix model_model_matrix(std::span<const ModelSeriesInput> models);

}  // namespace mcqpsy
