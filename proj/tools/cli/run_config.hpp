#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mcqpsy::cli {

// Settings shared by every subcommand. Loaded from a JSON file, then
// overridden by command-line flags. Secrets never live here: only the name of
// the environment variable that holds the endpoint token.
struct RunConfig {
  std::filesystem::path item_bank_path;
  std::vector<std::filesystem::path> response_paths;
  std::string endpoint_url;
  std::string model_id;
  std::string auth_env_var_name;
  std::size_t max_in_flight = 4;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = ".";
  std::string kl_direction_label = "KL(human || model)";
  std::size_t n_resamples = 2000;

  std::optional<double> temperature;               // fixed-T override
  std::optional<std::filesystem::path> from_file;  // collect: ingest adapter output
  int retry_backoff_ms = 1000;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Throws ValidationError: max_in_flight >= 1, n_resamples >= 100.
void validate_run_config(const RunConfig& config);

}  // namespace mcqpsy::cli
