#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mcqpsy {

inline constexpr std::size_t kNumOptions = 4;

using OptionScores = std::array<double, kNumOptions>;

// Partition key for calibration: one subject-grade (or CEFR level) subset of
// one dataset.
struct SubsetKey {
  std::string dataset_id;
  std::string subject;
  std::string level;

  auto operator<=>(const SubsetKey&) const = default;

  // "dataset/subject/level"
  std::string label() const;
};

// A point on the 4-option probability simplex, indexed by canonical option.
class ResponseDistribution {
 public:
  // Throws ValidationError unless entries are >= 0 and sum to 1 within 1e-9.
  explicit ResponseDistribution(const OptionScores& probs);

  static ResponseDistribution uniform();

  const OptionScores& probs() const noexcept { return probs_; }
  double operator[](std::size_t option) const { return probs_.at(option); }

  bool operator==(const ResponseDistribution&) const = default;

 private:
  OptionScores probs_;
};

struct IrtItemParams {
  std::string scale_id;
  double a = 1.0;  // discrimination
  double b = 0.0;  // difficulty
  double c = 0.0;  // guessing

  bool operator==(const IrtItemParams&) const = default;
};

// Throws ValidationError for a <= 0, c outside [0,1), non-finite values or an
// empty scale id.
void validate_irt_params(const IrtItemParams& params);

struct Item {
  std::string item_id;
  SubsetKey subset;
  std::optional<std::string> passage;
  std::string stem;
  std::array<std::string, kNumOptions> options;
  int correct_index = 0;
  std::optional<ResponseDistribution> human_dist;
  std::optional<double> omit_rate;
  std::vector<IrtItemParams> irt;

  const IrtItemParams* irt_for_scale(const std::string& scale_id) const;

  bool operator==(const Item&) const = default;
};

// Throws ValidationError naming the item on the first failing invariant.
void validate_item(const Item& item);

struct ItemBank {
  std::vector<Item> items;
  std::map<std::string, std::string> metadata;

  const Item* find(const std::string& item_id) const;
  std::size_t count_with_human_dist() const;
};

// Divides the four option masses by their sum. `omit_rate` is carried through
// for audit only. Throws DegenerateDistributionError on all-zero input and
// ValidationError on negative or non-finite entries.
ResponseDistribution renormalize_distribution(const OptionScores& raw);

// JSON Lines item records. An optional first line {"_metadata": {...}} holds
// bank-level annotations.
nlohmann::json item_to_json(const Item& item);
Item item_from_json(const nlohmann::json& record);

// All-or-nothing load. Throws ParseError (with line number), ValidationError
// or DuplicateIdError.
ItemBank load_item_bank(const std::filesystem::path& path);
ItemBank parse_item_bank(std::istream& in);

void save_item_bank(const ItemBank& bank, const std::filesystem::path& path);
void write_item_bank(const ItemBank& bank, std::ostream& out);

std::map<SubsetKey, std::vector<Item>> partition_by_subset(const ItemBank& bank);

}  // namespace mcqpsy
