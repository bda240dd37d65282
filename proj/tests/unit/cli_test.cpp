#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "mcqpsy/collector.hpp"
#include "mcqpsy/error.hpp"
#include "mock_server.hpp"
#include "test_support.hpp"

namespace mcqpsy::cli {
namespace {

using mcqpsy::testing::fixture;
using mcqpsy::testing::LogCapture;
using mcqpsy::testing::MockChatServer;
using mcqpsy::testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t count_lines(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) return 0;
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

struct Run {
  int code;
  std::string out, err;
};

template <typename F>
Run guarded(F&& body) {
  std::ostringstream out, err;
  int code = run_guarded([&] { return body(out, err); }, err);
  return {code, out.str(), err.str()};
}

RunConfig toy_config(const TempDir& dir) {
  RunConfig c;
  c.item_bank_path = fixture("toy_bank.jsonl");
  c.output_dir = dir.path();
  c.n_resamples = 200;
  c.master_seed = 5;
  c.retry_backoff_ms = 0;
  return c;
}

class Cli : public ::testing::Test {
 protected:
  LogCapture capture_;
  TempDir dir_;
};

TEST_F(Cli, ValidateToyBank) {
  auto r = guarded([&](auto& out, auto& err) { return cmd_validate(toy_config(dir_), out, err); });
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("12 items, 3 subsets"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("subject toy/reading: 4 items"), std::string::npos) << r.out;
}

TEST_F(Cli, ValidateCorruptLineReportsLineNumber) {
  std::string bank = slurp(fixture("toy_bank.jsonl"));
  // corrupt the 5th line
  std::istringstream in(bank);
  std::ostringstream corrupted;
  int n = 0;
  for (std::string line; std::getline(in, line);) {
    corrupted << (++n == 5 ? line.substr(0, line.size() / 2) : line) << '\n';
  }
  std::ofstream(dir_ / "bad.jsonl") << corrupted.str();
  RunConfig c = toy_config(dir_);
  c.item_bank_path = dir_ / "bad.jsonl";
  auto r = guarded([&](auto& out, auto& err) { return cmd_validate(c, out, err); });
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("line 5"), std::string::npos) << r.err;
}

TEST_F(Cli, CollectFromMockEndpointIsResumable) {
  MockChatServer server;
  RunConfig c = toy_config(dir_);
  c.endpoint_url = server.url();
  c.model_id = "mock-model";
  c.max_in_flight = 3;
  auto first = guarded([&](auto& out, auto& err) { return cmd_collect(c, out, err); });
  EXPECT_EQ(first.code, kExitOk) << first.err;
  EXPECT_EQ(server.calls(), 48);  // 12 items x 4 permutations
  auto stored = read_response_file(dir_ / "responses.jsonl");
  EXPECT_EQ(stored.size(), 12u);
  for (const auto& r : stored) EXPECT_NO_THROW(validate_model_response(r));

  auto second = guarded([&](auto& out, auto& err) { return cmd_collect(c, out, err); });
  EXPECT_EQ(second.code, kExitOk);
  EXPECT_EQ(server.calls(), 48);
  EXPECT_NE(second.out.find("collected 0 responses, skipped 12"), std::string::npos) << second.out;
  EXPECT_EQ(count_lines(dir_ / "responses.jsonl"), 12u);
}

TEST_F(Cli, CollectWithEndpointDownWritesNothing) {
  int port;
  {
    MockChatServer server;
    port = std::stoi(server.url().substr(server.url().rfind(':') + 1));
  }
  RunConfig c = toy_config(dir_);
  c.endpoint_url = "http://127.0.0.1:" + std::to_string(port);
  c.model_id = "mock-model";
  auto r = guarded([&](auto& out, auto& err) { return cmd_collect(c, out, err); });
  EXPECT_EQ(r.code, kExitTransport);
  EXPECT_EQ(count_lines(dir_ / "responses.jsonl"), 0u);
  EXPECT_NE(r.out.find("12 failed"), std::string::npos) << r.out;
}

TEST_F(Cli, CollectFromFileIngestsAdapterOutput) {
  RunConfig c = toy_config(dir_);
  c.from_file = fixture("toy_responses.jsonl");
  auto r = guarded([&](auto& out, auto& err) { return cmd_collect(c, out, err); });
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(count_lines(dir_ / "responses.jsonl"), 12u);
  auto again = guarded([&](auto& out, auto& err) { return cmd_collect(c, out, err); });
  EXPECT_NE(again.out.find("ingested 0 responses, 12 already present"), std::string::npos);
}

TEST_F(Cli, CollectRequiresEndpointOrFile) {
  RunConfig c = toy_config(dir_);
  c.model_id = "m";
  auto r = guarded([&](auto& out, auto& err) { return cmd_collect(c, out, err); });
  EXPECT_EQ(r.code, kExitInput);
}

TEST_F(Cli, AnalyzeIsByteIdenticalAcrossRuns) {
  RunConfig c = toy_config(dir_);
  c.response_paths = {fixture("toy_responses.jsonl")};
  c.output_dir = dir_ / "a";
  ASSERT_EQ(guarded([&](auto& o, auto& e) { return cmd_analyze(c, o, e); }).code, kExitOk);
  c.output_dir = dir_ / "b";
  ASSERT_EQ(guarded([&](auto& o, auto& e) { return cmd_analyze(c, o, e); }).code, kExitOk);
  std::string a = slurp(dir_ / "a" / "report.json");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir_ / "b" / "report.json"));
  EXPECT_EQ(slurp(dir_ / "a" / "mean_kl.csv"), slurp(dir_ / "b" / "mean_kl.csv"));
  EXPECT_NE(a.find("UniformBaseline"), std::string::npos);
  EXPECT_NE(a.find("OracleBaseline"), std::string::npos);
}

TEST_F(Cli, ReportRegeneratesTables) {
  RunConfig c = toy_config(dir_);
  c.response_paths = {fixture("toy_responses.jsonl")};
  ASSERT_EQ(guarded([&](auto& o, auto& e) { return cmd_analyze(c, o, e); }).code, kExitOk);
  auto r = guarded([&](auto& o, auto& e) {
    return cmd_report(dir_ / "report.json", dir_.path() / "again", o, e);
  });
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(slurp(dir_ / "mean_kl.csv"), slurp(dir_.path() / "again" / "mean_kl.csv"));
  EXPECT_EQ(slurp(dir_ / "irt_correlation.csv"), slurp(dir_.path() / "again" / "irt_correlation.csv"));
}

TEST_F(Cli, CalibrateWritesOneLinePerModelSubset) {
  RunConfig c = toy_config(dir_);
  c.response_paths = {fixture("toy_responses.jsonl")};
  ASSERT_EQ(guarded([&](auto& o, auto& e) { return cmd_calibrate(c, o, e); }).code, kExitOk);
  EXPECT_EQ(count_lines(dir_ / "calibration.jsonl"), 9u);  // 3 models x 3 subsets
}

TEST_F(Cli, AnalyzeWithMissingResponsesFails) {
  RunConfig c = toy_config(dir_);
  c.response_paths = {dir_ / "absent.jsonl"};
  EXPECT_EQ(guarded([&](auto& o, auto& e) { return cmd_analyze(c, o, e); }).code, kExitInput);
}

TEST_F(Cli, SimulateIsReproducible) {
  std::ofstream(dir_ / "spec.json")
      << R"({"items": [{"a": 1, "b": 0, "c": 0.25}, {"a": 1.7, "b": 0.8, "c": 0.1}],
            "n_takers": 500, "seed": 99})";
  auto run = [&](const std::string& sub) {
    return guarded([&](auto& o, auto& e) { return cmd_simulate(dir_ / "spec.json", dir_ / sub, o, e); });
  };
  ASSERT_EQ(run("x").code, kExitOk);
  ASSERT_EQ(run("y").code, kExitOk);
  EXPECT_EQ(slurp(dir_ / "x" / "matrix.csv"), slurp(dir_ / "y" / "matrix.csv"));
  EXPECT_EQ(count_lines(dir_ / "x" / "matrix.csv"), 501u);
  auto sidecar = nlohmann::json::parse(slurp(dir_ / "x" / "params.json"));
  EXPECT_DOUBLE_EQ(sidecar["items"][0]["expected_prob_theta0"].get<double>(), 0.625);
}

TEST_F(Cli, SimulateZeroTakersFails) {
  std::ofstream(dir_ / "spec.json") << R"({"items": [{"a": 1, "b": 0, "c": 0.25}], "n_takers": 0, "seed": 1})";
  auto r = guarded([&](auto& o, auto& e) { return cmd_simulate(dir_ / "spec.json", dir_ / "out", o, e); });
  EXPECT_EQ(r.code, kExitInput);
}

TEST(RunConfigTest, ValidatesInvariants) {
  RunConfig c;
  c.max_in_flight = 0;
  EXPECT_THROW(validate_run_config(c), ValidationError);
  c.max_in_flight = 1;
  c.n_resamples = 99;
  EXPECT_THROW(validate_run_config(c), ValidationError);
  c.n_resamples = 100;
  EXPECT_NO_THROW(validate_run_config(c));
  c.temperature = 0.0;
  EXPECT_THROW(validate_run_config(c), ValidationError);
}

TEST(RunConfigTest, FromJson) {
  auto c = run_config_from_json(nlohmann::json::parse(
      R"({"item_bank_path": "bank.jsonl", "response_paths": ["r1", "r2"], "model_id": "m",
          "auth_env_var_name": "TOKEN_VAR", "max_in_flight": 8, "master_seed": 3})"));
  EXPECT_EQ(c.item_bank_path, "bank.jsonl");
  EXPECT_EQ(c.response_paths.size(), 2u);
  EXPECT_EQ(c.auth_env_var_name, "TOKEN_VAR");
  EXPECT_EQ(c.max_in_flight, 8u);
  EXPECT_EQ(c.master_seed, 3u);
}

TEST(RunGuarded, MapsExceptionsToExitCodes) {
  std::ostringstream err;
  EXPECT_EQ(run_guarded([]() -> int { throw TransportError("x"); }, err), kExitTransport);
  EXPECT_EQ(run_guarded([]() -> int { throw ValidationError("x"); }, err), kExitInput);
  EXPECT_EQ(run_guarded([]() -> int { throw std::logic_error("x"); }, err), kExitInternal);
  EXPECT_EQ(run_guarded([] { return 0; }, err), kExitOk);
}

}  // namespace
}  // namespace mcqpsy::cli
