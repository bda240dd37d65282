#include "mcqpsy/itembank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mcqpsy/error.hpp"
#include "mcqpsy/log.hpp"

namespace mcqpsy {

using nlohmann::json;

namespace {

constexpr double kSimplexTolerance = 1e-9;
// Raw human masses come from published percentages; allow rounding slack when
// checking them against omit_rate.
constexpr double kRawMassTolerance = 1e-6;

const json& require(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw ParseError(std::string("missing field '") + field + "'", 0);
  }
  return *it;
}

std::string require_string(const json& record, const char* field) {
  const json& value = require(record, field);
  if (!value.is_string()) {
    throw ParseError(std::string("field '") + field + "' must be a string", 0);
  }
  return value.get<std::string>();
}

double require_number(const json& value, const std::string& what) {
  if (!value.is_number()) throw ParseError(what + " must be a number", 0);
  return value.get<double>();
}

bool is_null_or_absent(const json& record, const char* field) {
  auto it = record.find(field);
  return it == record.end() || it->is_null();
}

OptionScores read_four_numbers(const json& value, const char* field) {
  if (!value.is_array() || value.size() != kNumOptions) {
    throw ParseError(std::string("field '") + field +
                         "' must be an array of 4 numbers",
                     0);
  }
  OptionScores out{};
  for (std::size_t k = 0; k < kNumOptions; ++k) {
    out[k] = require_number(value[k], std::string(field) + "[" +
                                          std::to_string(k) + "]");
  }
  return out;
}

}  // namespace

std::string SubsetKey::label() const {
  return dataset_id + "/" + subject + "/" + level;
}

ResponseDistribution::ResponseDistribution(const OptionScores& probs)
    : probs_(probs) {
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("response distribution has a negative or "
                            "non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "response distribution sums to " << sum << ", expected 1";
    throw ValidationError(msg.str());
  }
}

ResponseDistribution ResponseDistribution::uniform() {
  return ResponseDistribution({0.25, 0.25, 0.25, 0.25});
}

void validate_irt_params(const IrtItemParams& params) {
  if (params.scale_id.empty()) {
    throw ValidationError("IRT parameters need a non-empty scale_id");
  }
  if (!std::isfinite(params.a) || !std::isfinite(params.b) ||
      !std::isfinite(params.c)) {
    throw ValidationError("IRT parameters for scale '" + params.scale_id +
                          "' must be finite");
  }
  if (params.a <= 0.0) {
    throw ValidationError("IRT discrimination a must be > 0 (scale '" +
                          params.scale_id + "')");
  }
  if (params.c < 0.0 || params.c >= 1.0) {
    throw ValidationError("IRT guessing c must lie in [0, 1) (scale '" +
                          params.scale_id + "')");
  }
}

const IrtItemParams* Item::irt_for_scale(const std::string& scale_id) const {
  for (const auto& p : irt) {
    if (p.scale_id == scale_id) return &p;
  }
  return nullptr;
}

void validate_item(const Item& item) {
  auto fail = [&](const std::string& reason) {
    throw ValidationError("item '" + item.item_id + "': " + reason);
  };
  if (item.item_id.empty()) fail("empty item_id");
  if (item.subset.dataset_id.empty() || item.subset.subject.empty() ||
      item.subset.level.empty()) {
    fail("dataset_id, subject and level must be non-empty");
  }
  if (item.stem.empty()) fail("empty stem");
  for (std::size_t k = 0; k < kNumOptions; ++k) {
    if (item.options[k].empty()) fail("option " + std::to_string(k) + " is empty");
  }
  if (item.correct_index < 0 ||
      item.correct_index >= static_cast<int>(kNumOptions)) {
    fail("correct_index " + std::to_string(item.correct_index) +
         " outside 0..3");
  }
  if (item.omit_rate &&
      (!std::isfinite(*item.omit_rate) || *item.omit_rate < 0.0 ||
       *item.omit_rate >= 1.0)) {
    fail("omit_rate must lie in [0, 1)");
  }
  std::set<std::string> scales;
  for (const auto& params : item.irt) {
    try {
      validate_irt_params(params);
    } catch (const ValidationError& e) {
      fail(e.what());
    }
    if (!scales.insert(params.scale_id).second) {
      fail("duplicate IRT scale_id '" + params.scale_id + "'");
    }
  }
}

const Item* ItemBank::find(const std::string& item_id) const {
  for (const auto& item : items) {
    if (item.item_id == item_id) return &item;
  }
  return nullptr;
}

std::size_t ItemBank::count_with_human_dist() const {
  std::size_t n = 0;
  for (const auto& item : items) n += item.human_dist.has_value();
  return n;
}

ResponseDistribution renormalize_distribution(const OptionScores& raw) {
  double sum = 0.0;
  for (double p : raw) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("distribution entries must be finite and >= 0");
    }
    sum += p;
  }
  if (sum <= 0.0) {
    throw DegenerateDistributionError("distribution has zero total mass");
  }
  OptionScores out{};
  for (std::size_t k = 0; k < kNumOptions; ++k) out[k] = raw[k] / sum;
  // Division leaves at most a few ulps of drift; fold it into the largest
  // entry so the simplex check is exact.
  double total = std::accumulate(out.begin(), out.end(), 0.0);
  auto largest = std::max_element(out.begin(), out.end());
  *largest += 1.0 - total;
  return ResponseDistribution(out);
}

json item_to_json(const Item& item) {
  json record = json::object();
  record["item_id"] = item.item_id;
  record["dataset_id"] = item.subset.dataset_id;
  record["subject"] = item.subset.subject;
  record["level"] = item.subset.level;
  record["passage"] = item.passage ? json(*item.passage) : json(nullptr);
  record["stem"] = item.stem;
  record["options"] = item.options;
  record["correct_index"] = item.correct_index;
  record["human_probs"] =
      item.human_dist ? json(item.human_dist->probs()) : json(nullptr);
  record["omit_rate"] = item.omit_rate ? json(*item.omit_rate) : json(nullptr);
  if (item.irt.empty()) {
    record["irt"] = nullptr;
  } else {
    json irt = json::array();
    for (const auto& p : item.irt) {
      irt.push_back({{"scale_id", p.scale_id}, {"a", p.a}, {"b", p.b}, {"c", p.c}});
    }
    record["irt"] = std::move(irt);
  }
  return record;
}

Item item_from_json(const json& record) {
  if (!record.is_object()) throw ParseError("record must be a JSON object", 0);
  Item item;
  item.item_id = require_string(record, "item_id");
  item.subset.dataset_id = require_string(record, "dataset_id");
  item.subset.subject = require_string(record, "subject");
  item.subset.level = require_string(record, "level");
  if (!is_null_or_absent(record, "passage")) {
    item.passage = require_string(record, "passage");
  }
  item.stem = require_string(record, "stem");

  const json& options = require(record, "options");
  if (!options.is_array() || options.size() != kNumOptions) {
    throw ParseError("field 'options' must be an array of exactly 4 strings", 0);
  }
  for (std::size_t k = 0; k < kNumOptions; ++k) {
    if (!options[k].is_string()) {
      throw ParseError("options[" + std::to_string(k) + "] must be a string", 0);
    }
    item.options[k] = options[k].get<std::string>();
  }

  const json& correct = require(record, "correct_index");
  if (!correct.is_number_integer()) {
    throw ParseError("field 'correct_index' must be an integer", 0);
  }
  item.correct_index = correct.get<int>();

  if (!is_null_or_absent(record, "omit_rate")) {
    item.omit_rate = require_number(record["omit_rate"], "field 'omit_rate'");
  }

  if (!is_null_or_absent(record, "human_probs")) {
    OptionScores raw = read_four_numbers(record["human_probs"], "human_probs");
    double mass = std::accumulate(raw.begin(), raw.end(), 0.0);
    bool normalized = std::abs(mass - 1.0) <= kRawMassTolerance;
    if (item.omit_rate) {
      if (!normalized &&
          std::abs(mass + *item.omit_rate - 1.0) > kRawMassTolerance) {
        throw ValidationError("item '" + item.item_id +
                              "': human_probs mass and omit_rate do not add "
                              "up to 1");
      }
    } else if (mass > 1.0 + kRawMassTolerance) {
      throw ValidationError("item '" + item.item_id +
                            "': human_probs sum exceeds 1");
    } else if (!normalized) {
      item.omit_rate = 1.0 - mass;
    }
    try {
      // Already-normalized input is kept verbatim so that a save/load cycle
      // reproduces the stored values bit for bit.
      item.human_dist = std::abs(mass - 1.0) <= kSimplexTolerance
                            ? ResponseDistribution(raw)
                            : renormalize_distribution(raw);
    } catch (const ValidationError& e) {
      throw ValidationError("item '" + item.item_id + "': " + e.what());
    }
  }

  if (!is_null_or_absent(record, "irt")) {
    const json& irt = record["irt"];
    if (!irt.is_array()) throw ParseError("field 'irt' must be an array", 0);
    for (const json& entry : irt) {
      if (!entry.is_object()) {
        throw ParseError("irt entries must be objects", 0);
      }
      IrtItemParams p;
      p.scale_id = require_string(entry, "scale_id");
      p.a = require_number(require(entry, "a"), "irt.a");
      p.b = require_number(require(entry, "b"), "irt.b");
      p.c = require_number(require(entry, "c"), "irt.c");
      item.irt.push_back(std::move(p));
    }
  }
  return item;
}

ItemBank parse_item_bank(std::istream& in) {
  ItemBank bank;
  std::unordered_set<std::string> seen;
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
    if (record.is_object() && record.contains("_metadata")) {
      if (!bank.items.empty()) {
        throw ParseError("metadata header must be the first record", line_no);
      }
      const json& meta = record["_metadata"];
      if (!meta.is_object()) {
        throw ParseError("'_metadata' must be an object", line_no);
      }
      for (const auto& [key, value] : meta.items()) {
        bank.metadata[key] = value.is_string() ? value.get<std::string>()
                                               : value.dump();
      }
      continue;
    }

    Item item;
    try {
      item = item_from_json(record);
      validate_item(item);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(item.item_id).second) {
      throw DuplicateIdError("line " + std::to_string(line_no) +
                             ": duplicate item_id '" + item.item_id + "'");
    }
    bank.items.push_back(std::move(item));
  }

  std::size_t missing = bank.items.size() - bank.count_with_human_dist();
  if (missing > 0) {
    log::info(std::to_string(missing) +
              " item(s) have no human distribution and will be excluded from "
              "human-comparison metrics");
  }
  return bank;
}

ItemBank load_item_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open item bank '" + path.string() + "'");
  return parse_item_bank(in);
}

void write_item_bank(const ItemBank& bank, std::ostream& out) {
  if (!bank.metadata.empty()) {
    out << json{{"_metadata", bank.metadata}}.dump() << '\n';
  }
  for (const auto& item : bank.items) out << item_to_json(item).dump() << '\n';
}

void save_item_bank(const ItemBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write item bank '" + path.string() + "'");
  write_item_bank(bank, out);
}

std::map<SubsetKey, std::vector<Item>> partition_by_subset(const ItemBank& bank) {
  std::map<SubsetKey, std::vector<Item>> groups;
  for (const auto& item : bank.items) groups[item.subset].push_back(item);
  return groups;
}

}  // namespace mcqpsy
