#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"

namespace {

using mcqpsy::cli::RunConfig;

struct Flags {
  std::string config;
  std::string bank;
  std::vector<std::string> responses;
  std::string model;
  std::string endpoint;
  std::string auth_env;
  std::string from_file;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> resamples;
  std::optional<std::size_t> max_in_flight;
  std::optional<double> temperature;
  std::optional<int> retry_backoff_ms;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--bank", f.bank, "Item bank (JSON Lines)");
  cmd->add_option("--responses", f.responses, "Response file(s) (JSON Lines)");
  cmd->add_option("--model", f.model, "Model identifier");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Master seed for bootstrap streams");
  cmd->add_option("--resamples", f.resamples, "Bootstrap resamples (>= 100)");
  cmd->add_option("--temperature", f.temperature, "Fixed temperature, skips calibration");
}

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : mcqpsy::cli::load_run_config(f.config);
  if (!f.bank.empty()) c.item_bank_path = f.bank;
  if (!f.responses.empty()) c.response_paths.assign(f.responses.begin(), f.responses.end());
  if (!f.model.empty()) c.model_id = f.model;
  if (!f.endpoint.empty()) c.endpoint_url = f.endpoint;
  if (!f.auth_env.empty()) c.auth_env_var_name = f.auth_env;
  if (!f.from_file.empty()) c.from_file = f.from_file;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.seed) c.master_seed = *f.seed;
  if (f.resamples) c.n_resamples = *f.resamples;
  if (f.max_in_flight) c.max_in_flight = *f.max_in_flight;
  if (f.temperature) c.temperature = *f.temperature;
  if (f.retry_backoff_ms) c.retry_backoff_ms = *f.retry_backoff_ms;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = mcqpsy::cli;
  CLI::App app{"Psychometric plausibility analysis of multiple-choice model responses"};
  app.require_subcommand(1);
  Flags f;

  auto* validate = app.add_subcommand("validate", "Load and check an item bank");
  add_common(validate, f);

  auto* collect = app.add_subcommand("collect", "Collect first-token letter logits");
  add_common(collect, f);
  collect->add_option("--endpoint", f.endpoint, "Chat-completions base URL");
  collect->add_option("--auth-env", f.auth_env, "Environment variable holding the token");
  collect->add_option("--from-file", f.from_file, "Ingest an adapter-produced response file");
  collect->add_option("--max-in-flight", f.max_in_flight, "Concurrent requests");
  collect->add_option("--retry-backoff-ms", f.retry_backoff_ms, "Initial retry backoff");

  auto* calibrate = app.add_subcommand("calibrate", "Fit per-subset temperatures");
  add_common(calibrate, f);

  auto* analyze = app.add_subcommand("analyze", "Calibrate and compute all metrics");
  add_common(analyze, f);

  std::string spec_path;
  auto* simulate = app.add_subcommand("simulate", "Simulate 3PL test-taker responses");
  simulate->add_option("--spec", spec_path, "Simulator spec (JSON)")->required();
  simulate->add_option("--out", f.out, "Output directory")->required();

  std::string report_path;
  auto* report = app.add_subcommand("report", "Summarize a saved report.json");
  report->add_option("--report", report_path, "report.json from analyze")->required();
  report->add_option("--out", f.out, "Regenerate CSV tables here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitInput;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  return cli::run_guarded(
      [&]() -> int {
        if (*validate) return cli::cmd_validate(resolve(f), out, err);
        if (*collect) return cli::cmd_collect(resolve(f), out, err);
        if (*calibrate) return cli::cmd_calibrate(resolve(f), out, err);
        if (*analyze) return cli::cmd_analyze(resolve(f), out, err);
        if (*simulate) return cli::cmd_simulate(spec_path, f.out, out, err);
        std::optional<std::filesystem::path> dir;
        if (!f.out.empty()) dir = f.out;
        return cli::cmd_report(report_path, dir, out, err);
      },
      err);
}
