#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcqpsy/itembank.hpp"

namespace mcqpsy {

// One candidate token at the first generated position with its log-score.
struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

// An inference backend that scores the first generated token of a
// chat-completion reply. Implementations must be safe to call from several
// threads at once.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  // Top-k candidates for the first generated token. Throws TransportError for
  // retryable failures and MalformedReplyError for unusable replies.
  virtual std::vector<TokenLogprob> first_token_logprobs(
      const std::string& prompt, const std::string& model_id) = 0;
};

struct EndpointConfig {
  // Base URL such as "http://localhost:8000"; requests go to
  // <url>/v1/chat/completions.
  std::string url;
  // Name of the environment variable holding the bearer token; empty for none.
  std::string auth_env_var;
  int top_logprobs = 20;
  std::chrono::seconds timeout{60};
};

// OpenAI-compatible chat-completions client. The rendered prompt is sent as
// the single user message, so the server's default system message applies.
class HttpEndpoint : public Endpoint {
 public:
  explicit HttpEndpoint(EndpointConfig config);

  std::vector<TokenLogprob> first_token_logprobs(
      const std::string& prompt, const std::string& model_id) override;

  nlohmann::json build_request(const std::string& prompt,
                               const std::string& model_id) const;

 private:
  EndpointConfig config_;
};

// Extracts choices[0].logprobs.content[0].top_logprobs from a chat-completion
// reply body. Throws MalformedReplyError.
std::vector<TokenLogprob> parse_chat_logprobs(const nlohmann::json& reply);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  // Injected so tests can run without real sleeping.
  std::function<void(std::chrono::milliseconds)> sleep;

  static RetryPolicy standard();
  static RetryPolicy immediate(int attempts = 3);
};

struct OptionLogits {
  OptionScores logits{};
  // Letters (0..3 for A..D) that were absent from the top-k list and received
  // the floor score.
  std::vector<int> missing_letters;
};

// Log-score offset below the lowest returned candidate given to a letter that
// did not make the top-k list.
inline constexpr double kMissingLetterPenalty = 1.0;

// Maps a top-k candidate list onto the four bare letter tokens "A".."D". A
// single missing letter is floored at (lowest returned log-score - 1.0) with a
// warning; two or more missing letters reject the run.
OptionLogits letter_logits(const std::vector<TokenLogprob>& candidates);

// Queries `endpoint` with bounded retries and exponential backoff on
// TransportError, then applies letter_logits.
OptionLogits fetch_option_logits(const std::string& prompt,
                                 const std::string& model_id,
                                 Endpoint& endpoint, const RetryPolicy& retry);

}  // namespace mcqpsy
