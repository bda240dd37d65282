#include "cli/commands.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "mcqpsy/calibrate.hpp"
#include "mcqpsy/collector.hpp"
#include "mcqpsy/error.hpp"
#include "mcqpsy/itembank.hpp"
#include "mcqpsy/psychometrics.hpp"
#include "mcqpsy/report.hpp"

namespace mcqpsy::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const TransportError& e) {
    err << "transport error: " << e.what() << '\n';
    return kExitTransport;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

namespace {

ItemBank require_bank(const RunConfig& config) {
  if (config.item_bank_path.empty()) throw ValidationError("no item bank given (--bank)");
  return load_item_bank(config.item_bank_path);
}

std::vector<ModelResponse> read_all_responses(const RunConfig& config) {
  std::vector<ModelResponse> all;
  for (const auto& path : config.response_paths) {
    auto part = read_response_file(path);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return all;
}

fs::path response_store(const RunConfig& config) {
  if (!config.response_paths.empty()) return config.response_paths.front();
  return config.output_dir / "responses.jsonl";
}

// Serializes appends to the response store; each record is one flushed line.
class ResponseStore {
 public:
  explicit ResponseStore(const fs::path& path) : path_(path) {
    if (fs::exists(path_)) {
      for (const auto& r : read_response_file(path_)) done_.insert({r.model_id, r.item_id});
    } else if (path_.has_parent_path()) {
      fs::create_directories(path_.parent_path());
    }
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw Error("cannot open response store '" + path_.string() + "'");
  }

  bool contains(const std::string& model_id, const std::string& item_id) const {
    std::lock_guard lock(mutex_);
    return done_.contains({model_id, item_id});
  }

  bool append(const ModelResponse& response) {
    std::ostringstream line;
    write_response(response, line);
    std::lock_guard lock(mutex_);
    if (!done_.insert({response.model_id, response.item_id}).second) return false;
    out_ << line.str();
    out_.flush();
    return true;
  }

 private:
  fs::path path_;
  std::ofstream out_;
  mutable std::mutex mutex_;
  std::set<std::pair<std::string, std::string>> done_;
};

}  // namespace

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream&) {
  ItemBank bank = require_bank(config);
  auto groups = partition_by_subset(bank);
  out << bank.items.size() << " items, " << groups.size() << " subsets\n";

  std::map<std::pair<std::string, std::string>, std::size_t> per_subject;
  for (const auto& [key, items] : groups) {
    std::size_t human = 0, irt = 0;
    for (const auto& item : items) {
      human += item.human_dist.has_value();
      irt += !item.irt.empty();
    }
    out << "  " << key.label() << ": " << items.size() << " items (" << human
        << " with human distribution, " << irt << " with IRT parameters)\n";
    per_subject[{key.dataset_id, key.subject}] += items.size();
  }
  for (const auto& [key, n] : per_subject) {
    out << "subject " << key.first << "/" << key.second << ": " << n << " items\n";
  }
  return kExitOk;
}

int cmd_collect(const RunConfig& config, std::ostream& out, std::ostream& err,
                std::shared_ptr<Endpoint> endpoint) {
  validate_run_config(config);
  ItemBank bank = require_bank(config);
  ResponseStore store(response_store(config));

  if (config.from_file) {
    std::size_t added = 0, skipped = 0;
    for (auto& r : read_response_file(*config.from_file)) {
      if (!config.model_id.empty() && r.model_id != config.model_id) continue;
      if (bank.find(r.item_id) == nullptr) {
        err << "warning: response for unknown item '" << r.item_id << "' ignored\n";
        continue;
      }
      (store.append(r) ? added : skipped) += 1;
    }
    out << "ingested " << added << " responses, " << skipped << " already present\n";
    return kExitOk;
  }

  if (config.model_id.empty()) throw ValidationError("no model given (--model)");
  if (!endpoint) {
    if (config.endpoint_url.empty()) {
      throw ValidationError("no endpoint given (--endpoint or --from-file)");
    }
    endpoint = std::make_shared<HttpEndpoint>(
        EndpointConfig{config.endpoint_url, config.auth_env_var_name});
  }

  std::vector<const Item*> pending;
  for (const auto& item : bank.items) {
    if (!store.contains(config.model_id, item.item_id)) pending.push_back(&item);
  }
  const std::size_t skipped = bank.items.size() - pending.size();

  RetryPolicy retry = RetryPolicy::standard();
  retry.initial_backoff = std::chrono::milliseconds(config.retry_backoff_ms);

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::vector<std::string> failures;
  bool transport_failed = false;

  auto worker = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      const Item& item = *pending[i];
      try {
        store.append(collect_item(item, config.model_id, *endpoint, retry));
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        failures.push_back(item.item_id + ": " + e.what());
        if (dynamic_cast<const TransportError*>(&e) != nullptr) transport_failed = true;
      }
    }
  };
  std::size_t n_workers = std::min(config.max_in_flight, std::max<std::size_t>(pending.size(), 1));
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
  workers.clear();

  out << "collected " << pending.size() - failures.size() << " responses, skipped "
      << skipped << " already present, " << failures.size() << " failed\n";
  std::sort(failures.begin(), failures.end());
  for (const auto& f : failures) err << "failed: " << f << '\n';
  if (failures.empty()) return kExitOk;
  return transport_failed ? kExitTransport : kExitInput;
}

int cmd_calibrate(const RunConfig& config, std::ostream& out, std::ostream&) {
  validate_run_config(config);
  ItemBank bank = require_bank(config);
  auto responses = read_all_responses(config);
  auto results = calibrate_all(bank, responses, true);

  fs::create_directories(config.output_dir);
  std::ofstream file(config.output_dir / "calibration.jsonl", std::ios::binary);
  if (!file) throw Error("cannot write calibration results");
  for (const auto& r : results) {
    file << calibration_to_json(r).dump() << '\n';
    out << r.model_id << ' ' << r.subset.label() << ": T = " << r.temperature
        << ", mean KL " << r.mean_kl_before << " -> " << r.mean_kl_after << " (n = " << r.n_items
        << ")\n";
  }
  return kExitOk;
}

int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream&) {
  validate_run_config(config);
  ItemBank bank = require_bank(config);
  auto responses = read_all_responses(config);

  AnalysisOptions options;
  options.master_seed = config.master_seed;
  options.n_resamples = config.n_resamples;
  options.fixed_temperature = config.temperature;
  options.kl_direction_label = config.kl_direction_label;
  AnalysisReport report = build_report(bank, responses, options);

  fs::create_directories(config.output_dir);
  {
    std::ofstream file(config.output_dir / "report.json", std::ios::binary);
    if (!file) throw Error("cannot write report.json");
    file << report_to_json(report).dump(2) << '\n';
  }
  write_report_tables(report, config.output_dir);
  print_report_summary(report, out);
  out << "\nreport written to " << (config.output_dir / "report.json").string() << '\n';
  return kExitOk;
}

int cmd_simulate(const fs::path& spec_path, const fs::path& output_dir, std::ostream& out,
                 std::ostream&) {
  std::ifstream in(spec_path);
  if (!in) throw Error("cannot open simulator spec '" + spec_path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("simulator spec is not valid JSON: ") + e.what(), 0);
  }
  SimulatorSpec spec = simulator_spec_from_json(j);
  ResponseMatrix matrix = simulate_population(spec);

  fs::create_directories(output_dir);
  {
    std::ofstream csv(output_dir / "matrix.csv", std::ios::binary);
    if (!csv) throw Error("cannot write matrix.csv");
    matrix.write_csv(csv);
  }
  {
    std::ofstream sidecar(output_dir / "params.json", std::ios::binary);
    sidecar << simulator_sidecar(spec).dump(2) << '\n';
  }
  out << "simulated " << matrix.persons() << " takers x " << matrix.items() << " items\n";
  for (std::size_t i = 0; i < matrix.items(); ++i) {
    out << "  " << matrix.item_ids()[i] << ": facility " << matrix.column_mean(i) << '\n';
  }
  return kExitOk;
}

int cmd_report(const fs::path& report_path, const std::optional<fs::path>& output_dir,
               std::ostream& out, std::ostream&) {
  std::ifstream in(report_path);
  if (!in) throw Error("cannot open report '" + report_path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what(), 0);
  }
  AnalysisReport report = report_from_json(doc);
  print_report_summary(report, out);
  if (output_dir) write_report_tables(report, *output_dir);
  return kExitOk;
}

}  // namespace mcqpsy::cli
