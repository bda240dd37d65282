#include "mcqpsy/collector.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mcqpsy/endpoint.hpp"
#include "mcqpsy/error.hpp"

namespace mcqpsy {

using nlohmann::json;

namespace {

constexpr char kLetters[] = "ABCD";

}  // namespace

OptionPermutation OptionPermutation::rotation(int shift) {
  OptionPermutation p;
  for (int k = 0; k < static_cast<int>(kNumOptions); ++k) {
    p.order[k] = ((k + shift) % 4 + 4) % 4;
  }
  return p;
}

bool OptionPermutation::is_valid() const {
  std::array<bool, kNumOptions> seen{};
  for (int idx : order) {
    if (idx < 0 || idx >= static_cast<int>(kNumOptions) || seen[idx]) return false;
    seen[idx] = true;
  }
  return true;
}

std::array<OptionPermutation, kNumOptions> cyclic_permutations() {
  std::array<OptionPermutation, kNumOptions> out;
  for (int s = 0; s < static_cast<int>(kNumOptions); ++s) {
    out[s] = OptionPermutation::rotation(s);
  }
  return out;
}

std::string to_string(ResponseSource source) {
  switch (source) {
    case ResponseSource::kEndpoint: return "endpoint";
    case ResponseSource::kFile: return "file";
    case ResponseSource::kBuiltin: return "builtin";
  }
  return "unknown";
}

ResponseSource response_source_from_string(const std::string& text) {
  if (text == "endpoint") return ResponseSource::kEndpoint;
  if (text == "file") return ResponseSource::kFile;
  if (text == "builtin") return ResponseSource::kBuiltin;
  throw ParseError("unknown response source '" + text + "'", 0);
}

void validate_model_response(const ModelResponse& response) {
  const std::string who = "response (" + response.model_id + ", " +
                          response.item_id + ")";
  if (response.item_id.empty() || response.model_id.empty()) {
    throw ValidationError(who + ": item_id and model_id must be non-empty");
  }
  // seen[position][option]
  std::array<std::array<bool, kNumOptions>, kNumOptions> seen{};
  for (const auto& run : response.runs) {
    if (!run.permutation.is_valid()) {
      throw LatinSquareError(who + ": run order is not a permutation of 0..3");
    }
    for (std::size_t k = 0; k < kNumOptions; ++k) {
      if (!std::isfinite(run.logits_by_position[k])) {
        throw ValidationError(who + ": non-finite logit");
      }
      int option = run.permutation.order[k];
      if (seen[k][option]) {
        throw LatinSquareError(who + ": option " + std::to_string(option) +
                               " appears twice at position " + kLetters[k]);
      }
      seen[k][option] = true;
    }
  }
}

OptionScores unpermute(const PermutationLogits& run) {
  OptionScores out{};
  for (std::size_t k = 0; k < kNumOptions; ++k) {
    out[run.permutation.order[k]] = run.logits_by_position[k];
  }
  return out;
}

OptionScores permute(const OptionScores& canonical, const OptionPermutation& perm) {
  OptionScores out{};
  for (std::size_t k = 0; k < kNumOptions; ++k) out[k] = canonical[perm.order[k]];
  return out;
}

std::string render_prompt(const Item& item, const OptionPermutation& perm) {
  std::ostringstream out;
  if (item.passage) {
    out << "Based on the following text, select the correct answer to the "
           "question below.\n\n"
        << "Text: " << *item.passage << "\n\n";
  } else {
    out << "Select the correct answer to the following question.\n\n";
  }
  out << "Question:\n" << item.stem << '\n';
  for (std::size_t k = 0; k < kNumOptions; ++k) {
    out << kLetters[k] << ") " << item.options.at(perm.order[k]) << '\n';
  }
  out << "\nRespond only with the letter of the answer (A, B, C, or D).";
  return out.str();
}

ModelResponse collect_item(const Item& item, const std::string& model_id,
                           Endpoint& endpoint, const RetryPolicy& retry) {
  ModelResponse response;
  response.item_id = item.item_id;
  response.model_id = model_id;
  response.source = ResponseSource::kEndpoint;
  auto perms = cyclic_permutations();
  for (std::size_t r = 0; r < kNumOptions; ++r) {
    OptionLogits fetched = fetch_option_logits(render_prompt(item, perms[r]),
                                               model_id, endpoint, retry);
    response.runs[r] = {perms[r], fetched.logits};
  }
  response.collected_at = utc_timestamp_now();
  validate_model_response(response);
  return response;
}

json response_to_json(const ModelResponse& response) {
  json runs = json::array();
  for (const auto& run : response.runs) {
    runs.push_back({{"order", run.permutation.order},
                    {"logits", run.logits_by_position}});
  }
  return {{"item_id", response.item_id},
          {"model_id", response.model_id},
          {"runs", std::move(runs)},
          {"collected_at", response.collected_at},
          {"source", to_string(response.source)}};
}

ModelResponse response_from_json(const json& record) {
  if (!record.is_object()) throw ParseError("record must be a JSON object", 0);
  ModelResponse response;
  try {
    response.item_id = record.at("item_id").get<std::string>();
    response.model_id = record.at("model_id").get<std::string>();
    response.collected_at = record.at("collected_at").get<std::string>();
    response.source =
        response_source_from_string(record.at("source").get<std::string>());
    const json& runs = record.at("runs");
    if (!runs.is_array() || runs.size() != kNumOptions) {
      throw ParseError("'runs' must hold exactly 4 entries, found " +
                           std::to_string(runs.is_array() ? runs.size() : 0),
                       0);
    }
    for (std::size_t r = 0; r < kNumOptions; ++r) {
      const json& order = runs[r].at("order");
      const json& logits = runs[r].at("logits");
      if (!order.is_array() || order.size() != kNumOptions || !logits.is_array() ||
          logits.size() != kNumOptions) {
        throw ParseError("run " + std::to_string(r) +
                             " needs 4 order entries and 4 logits",
                         0);
      }
      for (std::size_t k = 0; k < kNumOptions; ++k) {
        if (!order[k].is_number_integer() || !logits[k].is_number()) {
          throw ParseError("run " + std::to_string(r) + " has non-numeric entries", 0);
        }
        response.runs[r].permutation.order[k] = order[k].get<int>();
        response.runs[r].logits_by_position[k] = logits[k].get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("schema violation: ") + e.what(), 0);
  }
  return response;
}

std::vector<ModelResponse> parse_responses(std::istream& in) {
  std::vector<ModelResponse> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (record.is_object() && record.contains("_metadata")) continue;
    try {
      ModelResponse response = response_from_json(record);
      validate_model_response(response);
      out.push_back(std::move(response));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const LatinSquareError& e) {
      throw LatinSquareError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ModelResponse> read_response_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open response file '" + path.string() + "'");
  return parse_responses(in);
}

void write_response(const ModelResponse& response, std::ostream& out) {
  out << response_to_json(response).dump() << '\n';
}

std::string utc_timestamp_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace mcqpsy
