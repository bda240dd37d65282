#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcqpsy/itembank.hpp"

namespace mcqpsy {

class Endpoint;
struct RetryPolicy;

// order[k] is the canonical option index shown at display position k (A..D).
struct OptionPermutation {
  std::array<int, kNumOptions> order{0, 1, 2, 3};

  static OptionPermutation identity() { return {}; }
  // Rotation by `shift`: order[k] = (k + shift) mod 4.
  static OptionPermutation rotation(int shift);

  bool is_valid() const;
  bool operator==(const OptionPermutation&) const = default;
};

// The four rotations [0,1,2,3], [1,2,3,0], [2,3,0,1], [3,0,1,2]. Each option
// occupies each display position exactly once across the set.
std::array<OptionPermutation, kNumOptions> cyclic_permutations();

struct PermutationLogits {
  OptionPermutation permutation;
  OptionScores logits_by_position{};  // letter tokens A..D
};

enum class ResponseSource { kEndpoint, kFile, kBuiltin };

std::string to_string(ResponseSource source);
ResponseSource response_source_from_string(const std::string& text);

struct ModelResponse {
  std::string item_id;
  std::string model_id;
  std::array<PermutationLogits, kNumOptions> runs;
  std::string collected_at;  // RFC 3339
  ResponseSource source = ResponseSource::kEndpoint;
};

// Throws LatinSquareError unless every run holds a valid permutation and each
// canonical option appears at each display position exactly once. Throws
// ValidationError for non-finite logits or empty identifiers.
void validate_model_response(const ModelResponse& response);

// Maps position-indexed logits back to canonical option order:
// out[order[k]] = logits_by_position[k].
OptionScores unpermute(const PermutationLogits& run);

// Inverse of unpermute: position k receives canonical[order[k]].
OptionScores permute(const OptionScores& canonical, const OptionPermutation& perm);

// Prompt text for one item under one option ordering. Items with a passage
// get the reading-comprehension template, all others the question-only one.
std::string render_prompt(const Item& item, const OptionPermutation& perm);

// Runs the four cyclic permutations against `endpoint`, one call each. Either
// returns all four runs or throws; no partial response is ever produced.
ModelResponse collect_item(const Item& item, const std::string& model_id,
                           Endpoint& endpoint, const RetryPolicy& retry);

nlohmann::json response_to_json(const ModelResponse& response);
ModelResponse response_from_json(const nlohmann::json& record);

// Canonical JSON Lines response format. A leading {"_metadata": {...}} line
// (written by the local-model adapter) is accepted and skipped. Every record
// is validated, including the Latin-square check.
std::vector<ModelResponse> read_response_file(const std::filesystem::path& path);
std::vector<ModelResponse> parse_responses(std::istream& in);

void write_response(const ModelResponse& response, std::ostream& out);

// Current UTC time formatted as RFC 3339 with second precision.
std::string utc_timestamp_now();

}  // namespace mcqpsy
