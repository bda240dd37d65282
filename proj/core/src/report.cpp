#include "mcqpsy/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mcqpsy/error.hpp"
#include "mcqpsy/log.hpp"
#include "mcqpsy/psychometrics.hpp"
#include "mcqpsy/seed.hpp"

namespace mcqpsy {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Owns the response set for one analysis run: collected responses grouped by
// model plus synthesized baselines, with an index for (model, item) lookup.
class ResponseIndex {
 public:
  ResponseIndex(const ItemBank& bank, std::span<const ModelResponse> responses,
                bool include_baselines) {
    for (const auto& item : bank.items) items_[item.item_id] = &item;
    for (const auto& r : responses) {
      if (!items_.contains(r.item_id)) {
        ++orphans_;
        continue;
      }
      by_model_[r.model_id].push_back(r);
    }
    for (auto& [model_id, list] : by_model_) {
      model_ids_.push_back(model_id);
      llm_ids_.push_back(model_id);
    }
    if (include_baselines) {
      for (const auto& item : bank.items) {
        by_model_[kUniformBaselineId].push_back(uniform_baseline(item));
        by_model_[kOracleBaselineId].push_back(oracle_baseline(item));
      }
      model_ids_.push_back(kUniformBaselineId);
      model_ids_.push_back(kOracleBaselineId);
    }
    for (const auto& [model_id, list] : by_model_) {
      for (const auto& r : list) {
        auto [it, inserted] = index_.emplace(std::make_pair(model_id, r.item_id), &r);
        if (!inserted) {
          log::warning("duplicate response for (" + model_id + ", " + r.item_id +
                       "); keeping the first");
        }
      }
    }
    if (orphans_ > 0) {
      log::warning(std::to_string(orphans_) +
                   " response(s) reference items missing from the bank");
    }
  }

  const std::vector<std::string>& model_ids() const { return model_ids_; }
  const std::vector<std::string>& llm_ids() const { return llm_ids_; }
  std::size_t orphans() const { return orphans_; }

  const ModelResponse* find(const std::string& model_id, const std::string& item_id) const {
    auto it = index_.find({model_id, item_id});
    return it == index_.end() ? nullptr : it->second;
  }

 private:
  std::map<std::string, const Item*> items_;
  std::map<std::string, std::vector<ModelResponse>> by_model_;
  std::map<std::pair<std::string, std::string>, const ModelResponse*> index_;
  std::vector<std::string> model_ids_;
  std::vector<std::string> llm_ids_;
  std::size_t orphans_ = 0;
};

// Items with human data, grouped by subset, in bank order.
std::map<SubsetKey, std::vector<const Item*>> human_subsets(const ItemBank& bank) {
  std::map<SubsetKey, std::vector<const Item*>> out;
  for (const auto& item : bank.items) {
    if (item.human_dist) out[item.subset].push_back(&item);
  }
  return out;
}

std::vector<ItemResponse> pair_up(const ResponseIndex& index, const std::string& model_id,
                                  std::span<const Item* const> items) {
  std::vector<ItemResponse> out;
  for (const Item* item : items) {
    if (const ModelResponse* r = index.find(model_id, item->item_id)) {
      out.push_back({item, r});
    }
  }
  return out;
}

BootstrapOptions cell_options(const AnalysisOptions& options, const std::string& label) {
  return {options.n_resamples, options.ci_level, derive_seed(options.master_seed, label)};
}

template <typename Fn>
MetricCell guarded(Fn&& compute) {
  MetricCell cell;
  try {
    cell.metric = compute();
  } catch (const UndefinedStatisticError& e) {
    cell.undefined_reason = e.what();
  }
  return cell;
}

MetricCell undefined_cell(std::string reason) {
  MetricCell cell;
  cell.undefined_reason = std::move(reason);
  return cell;
}

}  // namespace

std::vector<CalibrationResult> calibrate_all(const ItemBank& bank,
                                             std::span<const ModelResponse> responses,
                                             bool include_baselines) {
  ResponseIndex index(bank, responses, include_baselines);
  std::vector<CalibrationResult> out;
  for (const auto& model_id : index.model_ids()) {
    for (const auto& [subset, items] : human_subsets(bank)) {
      auto pairs = pair_up(index, model_id, items);
      if (!pairs.empty()) out.push_back(optimize_temperature(pairs));
    }
  }
  return out;
}

AnalysisReport build_report(const ItemBank& bank, std::span<const ModelResponse> responses,
                            const AnalysisOptions& options) {
  if (options.fixed_temperature && !(*options.fixed_temperature > 0.0)) {
    throw std::invalid_argument("fixed temperature must be positive");
  }
  ResponseIndex index(bank, responses, options.include_baselines);
  const auto subsets = human_subsets(bank);

  AnalysisReport report;
  ReportHeader& h = report.header;
  h.kl_direction = options.kl_direction_label;
  h.calibration = options.fixed_temperature
                      ? "fixed temperature (no calibration)"
                      : "best-case calibrated: temperature fit on the evaluated items";
  h.omitted_mass =
      "human distributions renormalized over the four options; removed mass kept "
      "as omit_rate";
  h.n_resamples = options.n_resamples;
  h.ci_level = options.ci_level;
  h.master_seed = options.master_seed;
  h.fixed_temperature = options.fixed_temperature;
  h.n_items = bank.items.size();
  h.n_items_without_human_dist = bank.items.size() - bank.count_with_human_dist();
  h.n_responses_without_item = index.orphans();
  if (h.n_items_without_human_dist > 0) {
    log::info(std::to_string(h.n_items_without_human_dist) +
              " item(s) without human distribution excluded from metrics");
  }

  std::map<std::pair<std::string, SubsetKey>, double> temperatures;

  for (const auto& model_id : index.model_ids()) {
    for (const auto& [subset, items] : subsets) {
      auto pairs = pair_up(index, model_id, items);
      if (pairs.empty()) continue;
      const std::string cell = model_id + "|" + subset.label();

      SubsetRow row;
      row.model_id = model_id;
      row.subset = subset;
      if (options.fixed_temperature) {
        row.temperature = *options.fixed_temperature;
      } else {
        row.calibration = optimize_temperature(pairs);
        row.temperature = row.calibration->temperature;
      }
      temperatures[{model_id, subset}] = row.temperature;

      auto kls = per_item_kl(pairs, row.temperature);
      row.mean_kl = guarded([&] { return mean_metric(kls, cell_options(options, "kl|" + cell)); });
      auto kls_raw = per_item_kl(pairs, 1.0);
      row.mean_kl_uncalibrated = guarded(
          [&] { return mean_metric(kls_raw, cell_options(options, "kl_raw|" + cell)); });
      row.facility_correlation = guarded([&] {
        return ctt_facility_correlation(pairs, row.temperature,
                                        cell_options(options, "facility|" + cell));
      });

      std::vector<ItemDistribution> dists;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Item& item = *pairs[i].item;
        ResponseDistribution d = scaled_distribution(*pairs[i].response, row.temperature);
        report.kl_points.push_back({model_id, subset.label(), item.item_id, row.temperature, kls[i]});
        report.facility_points.push_back({model_id, subset.label(), item.item_id,
                                          item_facility(*item.human_dist, item.correct_index),
                                          d[item.correct_index]});
        dists.push_back({&item, d});
      }
      ModeAccuracy acc = mode_accuracy(dists);
      row.mode_ties = acc.ties;
      row.mode_accuracy =
          guarded([&] { return mean_metric(acc.hits, cell_options(options, "mode|" + cell)); });
      report.subset_rows.push_back(std::move(row));
    }
  }

  // Human rows: mode accuracy of the observed distributions.
  for (const auto& [subset, items] : subsets) {
    std::vector<ItemDistribution> dists;
    for (const Item* item : items) dists.push_back({item, *item->human_dist});
    ModeAccuracy acc = mode_accuracy(dists);
    SubsetRow row;
    row.model_id = kHumanId;
    row.subset = subset;
    row.mean_kl = undefined_cell("not applicable");
    row.mean_kl_uncalibrated = undefined_cell("not applicable");
    row.facility_correlation = undefined_cell("not applicable");
    row.mode_ties = acc.ties;
    row.mode_accuracy = guarded([&] {
      return mean_metric(acc.hits, cell_options(options, std::string("mode|") + kHumanId +
                                                             "|" + subset.label()));
    });
    report.subset_rows.push_back(std::move(row));
  }

  // IRT scales over items with human data.
  std::map<std::string, std::vector<const Item*>> scales;
  for (const auto& [subset, items] : subsets) {
    for (const Item* item : items) {
      for (const auto& p : item->irt) scales[p.scale_id].push_back(item);
    }
  }
  for (const auto& [scale_id, items] : scales) {
    for (const auto& model_id : index.model_ids()) {
      auto pairs = pair_up(index, model_id, items);
      if (pairs.empty()) continue;
      std::vector<double> temps;
      for (const auto& pair : pairs) {
        temps.push_back(temperatures.at({model_id, pair.item->subset}));
        report.irt_points.push_back(
            {model_id, scale_id, pair.item->item_id,
             expected_prob_theta0(*pair.item->irt_for_scale(scale_id)),
             correct_option_probability(pair, temps.back())});
      }
      ScaleRow row{model_id, scale_id, {}};
      row.irt_correlation = guarded([&] {
        return irt_expected_correlation(pairs, scale_id, temps,
                                        cell_options(options, "irt|" + model_id + "|" + scale_id));
      });
      report.scale_rows.push_back(std::move(row));
    }
    ScaleRow human{kHumanId, scale_id, {}};
    human.irt_correlation = guarded([&] {
      return human_upper_bound(items, scale_id,
                               cell_options(options, std::string("irt|") + kHumanId + "|" + scale_id));
    });
    for (const Item* item : items) {
      report.irt_points.push_back({kHumanId, scale_id, item->item_id,
                                   expected_prob_theta0(*item->irt_for_scale(scale_id)),
                                   item_facility(*item->human_dist, item->correct_index)});
    }
    report.scale_rows.push_back(std::move(human));
  }

  // Model-model (and model-human) correlation matrices per subset.
  for (const auto& [subset, items] : subsets) {
    std::vector<CorrectProbSeries> series;
    CorrectProbSeries human{kHumanId, {}};
    for (const Item* item : items) {
      human.by_item[item->item_id] = item_facility(*item->human_dist, item->correct_index);
    }
    series.push_back(std::move(human));
    for (const auto& model_id : index.llm_ids()) {
      auto pairs = pair_up(index, model_id, items);
      if (pairs.empty()) continue;
      CorrectProbSeries s{model_id, {}};
      double t = temperatures.at({model_id, subset});
      for (const auto& pair : pairs) {
        s.by_item[pair.item->item_id] = correct_option_probability(pair, t);
      }
      series.push_back(std::move(s));
    }
    MatrixBlock block;
    block.subset = subset;
    try {
      block.matrix = correlation_matrix(series);
    } catch (const UndefinedStatisticError& e) {
      block.undefined_reason = e.what();
    }
    report.matrices.push_back(std::move(block));
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

ordered_json cell_to_json(const MetricCell& cell) {
  if (!cell.metric) return ordered_json{{"undefined", cell.undefined_reason}};
  const MetricValue& m = *cell.metric;
  ordered_json out;
  out["value"] = m.value;
  out["ci_low"] = m.ci_low ? ordered_json(*m.ci_low) : ordered_json(nullptr);
  out["ci_high"] = m.ci_high ? ordered_json(*m.ci_high) : ordered_json(nullptr);
  out["n"] = m.n;
  out["p_value"] = m.p_value ? ordered_json(*m.p_value) : ordered_json(nullptr);
  return out;
}

MetricCell cell_from_json(const json& j) {
  MetricCell cell;
  if (j.contains("undefined")) {
    cell.undefined_reason = j.at("undefined").get<std::string>();
    return cell;
  }
  MetricValue m;
  m.value = j.at("value").get<double>();
  if (!j.at("ci_low").is_null()) m.ci_low = j.at("ci_low").get<double>();
  if (!j.at("ci_high").is_null()) m.ci_high = j.at("ci_high").get<double>();
  m.n = j.at("n").get<std::size_t>();
  if (!j.at("p_value").is_null()) m.p_value = j.at("p_value").get<double>();
  cell.metric = m;
  return cell;
}

ordered_json subset_to_json(const SubsetKey& s) {
  return {{"dataset_id", s.dataset_id}, {"subject", s.subject}, {"level", s.level}};
}

SubsetKey subset_from_json(const json& j) {
  return {j.at("dataset_id").get<std::string>(), j.at("subject").get<std::string>(),
          j.at("level").get<std::string>()};
}

ordered_json points_to_json(const std::vector<PlotPoint>& points) {
  ordered_json out = ordered_json::array();
  for (const auto& p : points) {
    out.push_back(ordered_json::array({p.model_id, p.group, p.item_id, p.x, p.y}));
  }
  return out;
}

std::vector<PlotPoint> points_from_json(const json& j) {
  std::vector<PlotPoint> out;
  for (const auto& p : j) {
    out.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>(),
                   p.at(2).get<std::string>(), p.at(3).get<double>(), p.at(4).get<double>()});
  }
  return out;
}

}  // namespace

ordered_json report_to_json(const AnalysisReport& report) {
  const ReportHeader& h = report.header;
  ordered_json doc;
  doc["header"] = {
      {"kl_direction", h.kl_direction},
      {"kl_unit", h.kl_unit},
      {"calibration", h.calibration},
      {"omitted_mass", h.omitted_mass},
      {"argmax_ties", h.argmax_ties},
      {"bootstrap_method", h.bootstrap_method},
      {"n_resamples", h.n_resamples},
      {"ci_level", h.ci_level},
      {"master_seed", h.master_seed},
      {"fixed_temperature",
       h.fixed_temperature ? ordered_json(*h.fixed_temperature) : ordered_json(nullptr)},
      {"n_items", h.n_items},
      {"n_items_without_human_dist", h.n_items_without_human_dist},
      {"n_responses_without_item", h.n_responses_without_item},
  };

  ordered_json rows = ordered_json::array();
  for (const auto& r : report.subset_rows) {
    ordered_json row;
    row["model_id"] = r.model_id;
    row["subset"] = subset_to_json(r.subset);
    row["temperature"] = r.temperature;
    if (r.calibration) {
      row["mean_kl_before"] = r.calibration->mean_kl_before;
      row["mean_kl_after"] = r.calibration->mean_kl_after;
    }
    row["mean_kl"] = cell_to_json(r.mean_kl);
    row["mean_kl_uncalibrated"] = cell_to_json(r.mean_kl_uncalibrated);
    row["facility_correlation"] = cell_to_json(r.facility_correlation);
    row["mode_accuracy"] = cell_to_json(r.mode_accuracy);
    row["mode_ties"] = r.mode_ties;
    rows.push_back(std::move(row));
  }
  doc["subsets"] = std::move(rows);

  ordered_json scales = ordered_json::array();
  for (const auto& r : report.scale_rows) {
    scales.push_back({{"model_id", r.model_id},
                      {"scale_id", r.scale_id},
                      {"irt_correlation", cell_to_json(r.irt_correlation)}});
  }
  doc["scales"] = std::move(scales);

  ordered_json matrices = ordered_json::array();
  for (const auto& block : report.matrices) {
    ordered_json m;
    m["subset"] = subset_to_json(block.subset);
    if (block.matrix) {
      m["names"] = block.matrix->names;
      m["item_ids"] = block.matrix->item_ids;
      ordered_json r = ordered_json::array();
      for (const auto& line : block.matrix->r) {
        ordered_json out_line = ordered_json::array();
        for (const auto& v : line) out_line.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
        r.push_back(std::move(out_line));
      }
      m["r"] = std::move(r);
    } else {
      m["undefined"] = block.undefined_reason;
    }
    matrices.push_back(std::move(m));
  }
  doc["model_matrices"] = std::move(matrices);

  doc["points"] = {{"columns", {"model_id", "group", "item_id", "x", "y"}},
                   {"kl", points_to_json(report.kl_points)},
                   {"facility", points_to_json(report.facility_points)},
                   {"irt", points_to_json(report.irt_points)}};
  return doc;
}

AnalysisReport report_from_json(const json& doc) {
  try {
    AnalysisReport report;
    const json& jh = doc.at("header");
    ReportHeader& h = report.header;
    h.kl_direction = jh.at("kl_direction").get<std::string>();
    h.kl_unit = jh.at("kl_unit").get<std::string>();
    h.calibration = jh.at("calibration").get<std::string>();
    h.omitted_mass = jh.at("omitted_mass").get<std::string>();
    h.argmax_ties = jh.at("argmax_ties").get<std::string>();
    h.bootstrap_method = jh.at("bootstrap_method").get<std::string>();
    h.n_resamples = jh.at("n_resamples").get<std::size_t>();
    h.ci_level = jh.at("ci_level").get<double>();
    h.master_seed = jh.at("master_seed").get<std::uint64_t>();
    if (!jh.at("fixed_temperature").is_null()) {
      h.fixed_temperature = jh.at("fixed_temperature").get<double>();
    }
    h.n_items = jh.at("n_items").get<std::size_t>();
    h.n_items_without_human_dist = jh.at("n_items_without_human_dist").get<std::size_t>();
    h.n_responses_without_item = jh.at("n_responses_without_item").get<std::size_t>();

    for (const json& j : doc.at("subsets")) {
      SubsetRow r;
      r.model_id = j.at("model_id").get<std::string>();
      r.subset = subset_from_json(j.at("subset"));
      r.temperature = j.at("temperature").get<double>();
      if (j.contains("mean_kl_before")) {
        CalibrationResult c;
        c.model_id = r.model_id;
        c.subset = r.subset;
        c.temperature = r.temperature;
        c.mean_kl_before = j.at("mean_kl_before").get<double>();
        c.mean_kl_after = j.at("mean_kl_after").get<double>();
        r.calibration = c;
      }
      r.mean_kl = cell_from_json(j.at("mean_kl"));
      r.mean_kl_uncalibrated = cell_from_json(j.at("mean_kl_uncalibrated"));
      r.facility_correlation = cell_from_json(j.at("facility_correlation"));
      r.mode_accuracy = cell_from_json(j.at("mode_accuracy"));
      r.mode_ties = j.at("mode_ties").get<std::size_t>();
      if (r.calibration && r.mean_kl.metric) r.calibration->n_items = r.mean_kl.metric->n;
      report.subset_rows.push_back(std::move(r));
    }
    for (const json& j : doc.at("scales")) {
      report.scale_rows.push_back({j.at("model_id").get<std::string>(),
                                   j.at("scale_id").get<std::string>(),
                                   cell_from_json(j.at("irt_correlation"))});
    }
    for (const json& j : doc.at("model_matrices")) {
      MatrixBlock block;
      block.subset = subset_from_json(j.at("subset"));
      if (j.contains("undefined")) {
        block.undefined_reason = j.at("undefined").get<std::string>();
      } else {
        CorrelationMatrix m;
        m.names = j.at("names").get<std::vector<std::string>>();
        m.item_ids = j.at("item_ids").get<std::vector<std::string>>();
        for (const json& line : j.at("r")) {
          std::vector<std::optional<double>> out_line;
          for (const json& v : line) {
            out_line.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
          }
          m.r.push_back(std::move(out_line));
        }
        block.matrix = std::move(m);
      }
      report.matrices.push_back(std::move(block));
    }
    const json& points = doc.at("points");
    report.kl_points = points_from_json(points.at("kl"));
    report.facility_points = points_from_json(points.at("facility"));
    report.irt_points = points_from_json(points.at("irt"));
    return report;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report document: ") + e.what(), 0);
  }
}

// ---------------------------------------------------------------------------
// CSV tables

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_columns(const MetricCell& cell) {
  if (!cell.metric) return "undefined,,,,";
  const MetricValue& m = *cell.metric;
  return num(m.value) + "," + opt_num(m.ci_low) + "," + opt_num(m.ci_high) + "," +
         opt_num(m.p_value) + "," + std::to_string(m.n);
}

std::ofstream open_table(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void write_subset_table(const AnalysisReport& report, const std::filesystem::path& path,
                        MetricCell SubsetRow::*member) {
  auto out = open_table(path);
  out << "model_id,dataset_id,subject,level,value,ci_low,ci_high,p_value,n\n";
  for (const auto& r : report.subset_rows) {
    const MetricCell& cell = r.*member;
    if (!cell.metric && cell.undefined_reason == "not applicable") continue;
    out << csv_field(r.model_id) << ',' << csv_field(r.subset.dataset_id) << ','
        << csv_field(r.subset.subject) << ',' << csv_field(r.subset.level) << ','
        << cell_columns(cell) << '\n';
  }
}

void write_points(const std::vector<PlotPoint>& points, const std::filesystem::path& path,
                  const char* x_name, const char* y_name) {
  auto out = open_table(path);
  out << "model_id,group,item_id," << x_name << ',' << y_name << '\n';
  for (const auto& p : points) {
    out << csv_field(p.model_id) << ',' << csv_field(p.group) << ',' << csv_field(p.item_id)
        << ',' << num(p.x) << ',' << num(p.y) << '\n';
  }
}

std::string file_safe(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
  }
  return out;
}

}  // namespace

void write_report_tables(const AnalysisReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_subset_table(report, dir / "mean_kl.csv", &SubsetRow::mean_kl);
  write_subset_table(report, dir / "mean_kl_uncalibrated.csv", &SubsetRow::mean_kl_uncalibrated);
  write_subset_table(report, dir / "facility_correlation.csv", &SubsetRow::facility_correlation);
  write_subset_table(report, dir / "mode_accuracy.csv", &SubsetRow::mode_accuracy);

  {
    auto out = open_table(dir / "temperatures.csv");
    out << "model_id,dataset_id,subject,level,temperature,mean_kl_before,mean_kl_after\n";
    for (const auto& r : report.subset_rows) {
      if (r.model_id == kHumanId) continue;
      out << csv_field(r.model_id) << ',' << csv_field(r.subset.dataset_id) << ','
          << csv_field(r.subset.subject) << ',' << csv_field(r.subset.level) << ','
          << num(r.temperature) << ','
          << (r.calibration ? num(r.calibration->mean_kl_before) : "") << ','
          << (r.calibration ? num(r.calibration->mean_kl_after) : "") << '\n';
    }
  }
  {
    auto out = open_table(dir / "irt_correlation.csv");
    out << "model_id,scale_id,value,ci_low,ci_high,p_value,n\n";
    for (const auto& r : report.scale_rows) {
      out << csv_field(r.model_id) << ',' << csv_field(r.scale_id) << ','
          << cell_columns(r.irt_correlation) << '\n';
    }
  }
  for (const auto& block : report.matrices) {
    if (!block.matrix) continue;
    auto out = open_table(dir / ("model_matrix_" + file_safe(block.subset.label()) + ".csv"));
    const auto& m = *block.matrix;
    out << "name";
    for (const auto& n : m.names) out << ',' << csv_field(n);
    out << '\n';
    for (std::size_t i = 0; i < m.names.size(); ++i) {
      out << csv_field(m.names[i]);
      for (const auto& v : m.r[i]) out << ',' << (v ? num(*v) : "undefined");
      out << '\n';
    }
  }
  write_points(report.kl_points, dir / "points_kl.csv", "temperature", "kl");
  write_points(report.facility_points, dir / "points_facility.csv", "facility",
               "model_correct_prob");
  write_points(report.irt_points, dir / "points_irt.csv", "expected_prob_theta0",
               "correct_prob");
}

void print_report_summary(const AnalysisReport& report, std::ostream& out) {
  const ReportHeader& h = report.header;
  out << "divergence: " << h.kl_direction << " [" << h.kl_unit << "]\n"
      << "calibration: " << h.calibration << '\n'
      << "bootstrap: " << h.bootstrap_method << ", " << h.n_resamples << " resamples, "
      << h.ci_level * 100 << "% CI, seed " << h.master_seed << '\n'
      << "items: " << h.n_items << " (" << h.n_items_without_human_dist
      << " without human distribution)\n\n";

  auto show = [&](const MetricCell& cell) {
    std::ostringstream s;
    if (!cell.metric) return std::string("undefined");
    const auto& m = *cell.metric;
    s << std::fixed << std::setprecision(3) << m.value;
    if (m.ci_low) s << " [" << *m.ci_low << ", " << *m.ci_high << "]";
    if (m.p_value && *m.p_value < 0.05) s << " *";
    return s.str();
  };

  out << std::left << std::setw(22) << "model" << std::setw(26) << "subset" << std::setw(9)
      << "T" << std::setw(28) << "mean KL" << std::setw(28) << "facility r"
      << "mode acc\n";
  for (const auto& r : report.subset_rows) {
    std::ostringstream t;
    t << std::fixed << std::setprecision(3) << r.temperature;
    out << std::setw(22) << r.model_id << std::setw(26) << r.subset.label() << std::setw(9)
        << (r.model_id == kHumanId ? "-" : t.str()) << std::setw(28) << show(r.mean_kl)
        << std::setw(28) << show(r.facility_correlation) << show(r.mode_accuracy) << '\n';
  }
  if (!report.scale_rows.empty()) {
    out << '\n' << std::setw(22) << "model" << std::setw(26) << "IRT scale" << "r\n";
    for (const auto& r : report.scale_rows) {
      out << std::setw(22) << r.model_id << std::setw(26) << r.scale_id
          << show(r.irt_correlation) << '\n';
    }
  }
}

}  // namespace mcqpsy
