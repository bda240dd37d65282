#include "cli/run_config.hpp"

#include <fstream>

#include "mcqpsy/error.hpp"

namespace mcqpsy::cli {

using nlohmann::json;

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("item_bank_path")) c.item_bank_path = j["item_bank_path"].get<std::string>();
    if (j.contains("response_paths")) {
      for (const auto& p : j["response_paths"]) c.response_paths.emplace_back(p.get<std::string>());
    }
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.model_id = j.value("model_id", c.model_id);
    c.auth_env_var_name = j.value("auth_env_var_name", c.auth_env_var_name);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    c.kl_direction_label = j.value("kl_direction_label", c.kl_direction_label);
    c.n_resamples = j.value("n_resamples", c.n_resamples);
    if (j.contains("temperature") && !j["temperature"].is_null()) {
      c.temperature = j["temperature"].get<double>();
    }
    c.retry_backoff_ms = j.value("retry_backoff_ms", c.retry_backoff_ms);
  } catch (const json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what(), 0);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  return run_config_from_json(j);
}

void validate_run_config(const RunConfig& config) {
  if (config.max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
  if (config.n_resamples < 100) throw ValidationError("n_resamples must be >= 100");
  if (config.temperature && !(*config.temperature > 0.0)) {
    throw ValidationError("temperature must be > 0");
  }
}

}  // namespace mcqpsy::cli
