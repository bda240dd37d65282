#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcqpsy/analysis.hpp"
#include "mcqpsy/calibrate.hpp"
#include "mcqpsy/collector.hpp"
#include "mcqpsy/itembank.hpp"

namespace mcqpsy {

struct AnalysisOptions {
  std::uint64_t master_seed = 0;
  std::size_t n_resamples = 2000;
  double ci_level = 0.95;
  // Skips calibration and evaluates every model at this temperature.
  std::optional<double> fixed_temperature;
  bool include_baselines = true;
  std::string kl_direction_label = "KL(human || model)";
};

// A metric or the reason it is undefined (zero variance, too few items).
struct MetricCell {
  std::optional<MetricValue> metric;
  std::string undefined_reason;

  bool defined() const { return metric.has_value(); }
};

struct SubsetRow {
  std::string model_id;
  SubsetKey subset;
  std::optional<CalibrationResult> calibration;
  double temperature = 1.0;
  MetricCell mean_kl;               // at `temperature`
  MetricCell mean_kl_uncalibrated;  // at T = 1
  MetricCell facility_correlation;
  MetricCell mode_accuracy;
  std::size_t mode_ties = 0;
};

struct ScaleRow {
  std::string model_id;  // kHumanId for the upper-bound row
  std::string scale_id;
  MetricCell irt_correlation;
};

struct MatrixBlock {
  SubsetKey subset;
  std::optional<CorrelationMatrix> matrix;
  std::string undefined_reason;
};

// One (x, y) point behind a figure, tied to the item it came from.
struct PlotPoint {
  std::string model_id;
  std::string group;  // subset label or scale id
  std::string item_id;
  double x = 0.0;
  double y = 0.0;
};

struct ReportHeader {
  std::string kl_direction;
  std::string kl_unit = "nats";
  std::string calibration;
  std::string omitted_mass;
  std::string argmax_ties = "lowest index";
  std::string bootstrap_method = "percentile, items resampled with replacement";
  std::size_t n_resamples = 0;
  double ci_level = 0.95;
  std::uint64_t master_seed = 0;
  std::optional<double> fixed_temperature;
  std::size_t n_items = 0;
  std::size_t n_items_without_human_dist = 0;
  std::size_t n_responses_without_item = 0;
};

struct AnalysisReport {
  ReportHeader header;
  std::vector<SubsetRow> subset_rows;
  std::vector<ScaleRow> scale_rows;
  std::vector<MatrixBlock> matrices;
  std::vector<PlotPoint> kl_points;        // x = temperature, y = item KL
  std::vector<PlotPoint> facility_points;  // x = facility, y = model correct prob
  std::vector<PlotPoint> irt_points;       // x = expected prob, y = model correct prob
};

// Calibrates every (model, subset) and evaluates all metrics. Deterministic in
// (bank, responses, options).
AnalysisReport build_report(const ItemBank& bank,
                            std::span<const ModelResponse> responses,
                            const AnalysisOptions& options);

// Calibration only, one result per (model, subset) with human data.
std::vector<CalibrationResult> calibrate_all(const ItemBank& bank,
                                             std::span<const ModelResponse> responses,
                                             bool include_baselines);

nlohmann::ordered_json report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const nlohmann::json& document);

// Flat tables: mean_kl.csv, mean_kl_uncalibrated.csv, temperatures.csv,
// facility_correlation.csv, irt_correlation.csv, mode_accuracy.csv,
// model_matrix_<subset>.csv and points_*.csv plot data.
void write_report_tables(const AnalysisReport& report,
                         const std::filesystem::path& directory);

void print_report_summary(const AnalysisReport& report, std::ostream& out);

}  // namespace mcqpsy
