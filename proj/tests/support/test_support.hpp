#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "mcqpsy/endpoint.hpp"
#include "mcqpsy/itembank.hpp"
#include "mcqpsy/log.hpp"

namespace mcqpsy::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(MCQPSY_FIXTURE_DIR) / name;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("mcqpsy_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Collects log output for the lifetime of the object.
class LogCapture {
 public:
  LogCapture() {
    previous_ = log::set_sink([this](log::Level level, std::string_view msg) {
      std::lock_guard lock(mutex_);
      (level == log::Level::kWarning ? warnings_ : infos_).emplace_back(msg);
    });
  }
  ~LogCapture() { log::set_sink(previous_); }

  std::vector<std::string> warnings() const {
    std::lock_guard lock(mutex_);
    return warnings_;
  }

 private:
  log::Sink previous_;
  mutable std::mutex mutex_;
  std::vector<std::string> warnings_, infos_;
};

inline Item make_item(const std::string& id, int correct,
                      std::optional<OptionScores> human = std::nullopt,
                      std::string subject = "history", std::string level = "8") {
  Item item;
  item.item_id = id;
  item.subset = {"toy", std::move(subject), std::move(level)};
  item.stem = "Question " + id + "?";
  item.options = {"first", "second", "third", "fourth"};
  item.correct_index = correct;
  if (human) item.human_dist = ResponseDistribution(*human);
  return item;
}

// Replies with fixed letter log-probs, independent of the prompt.
class FixedEndpoint : public Endpoint {
 public:
  explicit FixedEndpoint(std::vector<TokenLogprob> reply) : reply_(std::move(reply)) {}

  std::vector<TokenLogprob> first_token_logprobs(const std::string& prompt,
                                                 const std::string&) override {
    std::lock_guard lock(mutex_);
    prompts_.push_back(prompt);
    return reply_;
  }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return prompts_.size();
  }
  std::vector<std::string> prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
  }

 private:
  std::vector<TokenLogprob> reply_;
  mutable std::mutex mutex_;
  std::vector<std::string> prompts_;
};

// Delegates to a callback; the counter is the 1-based call index.
class ScriptedEndpoint : public Endpoint {
 public:
  using Script = std::function<std::vector<TokenLogprob>(int call, const std::string& prompt)>;
  explicit ScriptedEndpoint(Script script) : script_(std::move(script)) {}

  std::vector<TokenLogprob> first_token_logprobs(const std::string& prompt,
                                                 const std::string&) override {
    return script_(++calls_, prompt);
  }
  int calls() const { return calls_; }

 private:
  Script script_;
  std::atomic<int> calls_{0};
};

inline std::vector<TokenLogprob> letters(double a, double b, double c, double d) {
  return {{"A", a}, {"B", b}, {"C", c}, {"D", d}};
}

}  // namespace mcqpsy::testing
