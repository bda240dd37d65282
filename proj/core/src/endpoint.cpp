#include "mcqpsy/endpoint.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string_view>
#include <thread>

#include <httplib.h>

#include "mcqpsy/error.hpp"
#include "mcqpsy/log.hpp"

namespace mcqpsy {

using nlohmann::json;

namespace {

constexpr std::string_view kChatPath = "/v1/chat/completions";

struct SplitUrl {
  std::string scheme_host_port;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  if (!out.path.ends_with("/chat/completions")) out.path += kChatPath;
  return out;
}

}  // namespace

HttpEndpoint::HttpEndpoint(EndpointConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw Error("endpoint URL is empty");
}

json HttpEndpoint::build_request(const std::string& prompt,
                                 const std::string& model_id) const {
  return {
      {"model", model_id},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"max_tokens", 1},
      {"temperature", 0},
      {"logprobs", true},
      {"top_logprobs", config_.top_logprobs},
  };
}

std::vector<TokenLogprob> HttpEndpoint::first_token_logprobs(
    const std::string& prompt, const std::string& model_id) {
  SplitUrl target = split_url(config_.url);
  httplib::Client client(target.scheme_host_port);
  if (!client.is_valid()) {
    throw Error("unsupported endpoint URL '" + config_.url + "'");
  }
  auto timeout = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  client.set_connection_timeout(timeout.count(), 0);
  client.set_read_timeout(timeout.count(), 0);

  httplib::Headers headers;
  if (!config_.auth_env_var.empty()) {
    const char* token = std::getenv(config_.auth_env_var.c_str());
    if (token == nullptr || *token == '\0') {
      throw ValidationError("auth variable " + config_.auth_env_var +
                            " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  auto result = client.Post(target.path, headers,
                            build_request(prompt, model_id).dump(),
                            "application/json");
  if (!result) {
    throw TransportError("request to " + config_.url +
                         " failed: " + httplib::to_string(result.error()));
  }
  if (result->status == 401 || result->status == 403 || result->status == 429 ||
      result->status >= 500) {
    throw TransportError("endpoint returned HTTP " +
                         std::to_string(result->status));
  }
  if (result->status != 200) {
    throw MalformedReplyError("endpoint returned HTTP " +
                              std::to_string(result->status) + ": " +
                              result->body.substr(0, 200));
  }
  json reply;
  try {
    reply = json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw MalformedReplyError(std::string("reply is not JSON: ") + e.what());
  }
  return parse_chat_logprobs(reply);
}

std::vector<TokenLogprob> parse_chat_logprobs(const json& reply) {
  try {
    const json& content =
        reply.at("choices").at(0).at("logprobs").at("content");
    if (!content.is_array() || content.empty()) {
      throw MalformedReplyError("reply has no token log-probabilities");
    }
    const json& first = content.at(0);
    std::vector<TokenLogprob> out;
    for (const json& entry : first.at("top_logprobs")) {
      out.push_back({entry.at("token").get<std::string>(),
                     entry.at("logprob").get<double>()});
    }
    // Some servers omit the sampled token from top_logprobs.
    if (first.contains("token") && first.contains("logprob")) {
      std::string sampled = first["token"].get<std::string>();
      bool listed = std::any_of(out.begin(), out.end(), [&](const auto& t) {
        return t.token == sampled;
      });
      if (!listed) out.push_back({sampled, first["logprob"].get<double>()});
    }
    if (out.empty()) throw MalformedReplyError("reply has an empty top-k list");
    return out;
  } catch (const json::exception& e) {
    throw MalformedReplyError(std::string("unexpected reply layout: ") + e.what());
  }
}

RetryPolicy RetryPolicy::standard() {
  RetryPolicy policy;
  policy.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  return policy;
}

RetryPolicy RetryPolicy::immediate(int attempts) {
  RetryPolicy policy;
  policy.max_attempts = attempts;
  policy.initial_backoff = std::chrono::milliseconds(0);
  policy.sleep = [](std::chrono::milliseconds) {};
  return policy;
}

OptionLogits letter_logits(const std::vector<TokenLogprob>& candidates) {
  constexpr std::string_view kLetters = "ABCD";
  constexpr double kUnset = -std::numeric_limits<double>::infinity();

  OptionLogits out;
  out.logits.fill(kUnset);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (!std::isfinite(c.logprob)) continue;
    lowest = std::min(lowest, c.logprob);
    // Some tokenizers emit the letter with a leading space.
    std::string_view token = c.token;
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) {
      token.remove_prefix(1);
    }
    if (token.size() != 1) continue;
    auto letter = kLetters.find(token[0]);
    if (letter == std::string_view::npos) continue;
    out.logits[letter] = std::max(out.logits[letter], c.logprob);
  }
  for (int k = 0; k < static_cast<int>(kNumOptions); ++k) {
    if (out.logits[k] == kUnset) out.missing_letters.push_back(k);
  }
  if (out.missing_letters.size() >= 2) {
    throw MalformedReplyError(std::to_string(out.missing_letters.size()) +
                              " answer letters missing from the top-k list");
  }
  for (int k : out.missing_letters) {
    out.logits[k] = lowest - kMissingLetterPenalty;
    log::warning(std::string("letter ") + kLetters[k] +
                 " absent from top-k; using floor score " +
                 std::to_string(out.logits[k]));
  }
  return out;
}

OptionLogits fetch_option_logits(const std::string& prompt,
                                 const std::string& model_id,
                                 Endpoint& endpoint, const RetryPolicy& retry) {
  auto backoff = retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return letter_logits(endpoint.first_token_logprobs(prompt, model_id));
    } catch (const TransportError& e) {
      if (attempt >= retry.max_attempts) {
        throw TransportError(std::string(e.what()) + " (after " +
                             std::to_string(attempt) + " attempts)");
      }
      log::warning(std::string("transport error, retrying: ") + e.what());
      if (retry.sleep) retry.sleep(backoff);
      backoff *= 2;
    }
  }
}

}  // namespace mcqpsy
