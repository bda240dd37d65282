#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>

#include "cli/run_config.hpp"
#include "mcqpsy/endpoint.hpp"

namespace mcqpsy::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,      // validation or input error
  kExitTransport = 2,  // endpoint unreachable or failing
  kExitInternal = 3,
};

// Runs `body`, mapping library exceptions to exit codes and printing the
// message to `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

// Each command returns an exit code and reports on `out` / `err`. They throw
// only for programming errors; wrap them in run_guarded at the boundary.
int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);

// Collects one ModelResponse per bank item into the response store (first
// --responses path, else <out>/responses.jsonl). Pairs already present are
// skipped. `endpoint` overrides the HTTP client built from the config.
int cmd_collect(const RunConfig& config, std::ostream& out, std::ostream& err,
                std::shared_ptr<Endpoint> endpoint = nullptr);

int cmd_calibrate(const RunConfig& config, std::ostream& out, std::ostream& err);

// Writes <out>/report.json plus CSV tables and plot data.
int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& err);

int cmd_simulate(const std::filesystem::path& spec_path,
                 const std::filesystem::path& output_dir, std::ostream& out,
                 std::ostream& err);

// Prints a saved report; regenerates its tables when `output_dir` is given.
int cmd_report(const std::filesystem::path& report_path,
               const std::optional<std::filesystem::path>& output_dir,
               std::ostream& out, std::ostream& err);

}  // namespace mcqpsy::cli
