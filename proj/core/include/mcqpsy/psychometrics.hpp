#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcqpsy/itembank.hpp"

namespace mcqpsy {

// Proportion of test takers choosing the correct option.
double item_facility(const ResponseDistribution& dist, int correct_index);

// Persons x items 0/1 score matrix, row-major.
class ResponseMatrix {
 public:
  ResponseMatrix(std::size_t persons, std::vector<std::string> item_ids);

  std::size_t persons() const noexcept { return persons_; }
  std::size_t items() const noexcept { return item_ids_.size(); }
  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }

  std::uint8_t at(std::size_t person, std::size_t item) const {
    return scores_[person * items() + item];
  }
  // Throws std::invalid_argument for values other than 0 or 1.
  void set(std::size_t person, std::size_t item, int score);

  std::vector<double> column(std::size_t item) const;
  // Per-person sum over all items.
  std::vector<double> totals() const;
  double column_mean(std::size_t item) const;

  void write_csv(std::ostream& out) const;

 private:
  std::size_t persons_;
  std::vector<std::string> item_ids_;
  std::vector<std::uint8_t> scores_;
};

enum class DiscriminationMode {
  kItemTotal,  // total includes the item itself
  kRestScore,  // total excludes the item (corrected item-total correlation)
};

// Pearson correlation between an item's 0/1 column and the persons' total
// scores. Throws UndefinedStatisticError with fewer than 3 persons or zero
// variance in either vector.
double item_discrimination(const ResponseMatrix& matrix, std::size_t item,
                           DiscriminationMode mode = DiscriminationMode::kItemTotal);

// 3PL item characteristic curve: c + (1 - c) / (1 + exp(-a (theta - b))).
double icc_3pl(const IrtItemParams& params, double theta);

// Expected correct-response probability of an average (theta = 0) taker:
// c + (1 - c) / (1 + exp(a b)).
double expected_prob_theta0(const IrtItemParams& params);

// Entry (p, i) is a Bernoulli draw with probability icc_3pl(params[i],
// thetas[p]). Deterministic for a given seed.
ResponseMatrix simulate_response_matrix(std::span<const IrtItemParams> params,
                                        std::span<const double> thetas,
                                        std::uint64_t seed);

// Facility of an item in a Normal(mean, sd) ability population, integrated
// by adaptive quadrature.
double population_facility(const IrtItemParams& params, double ability_mean,
                           double ability_sd);

struct SimulatorSpec {
  std::vector<IrtItemParams> items;
  std::vector<std::string> item_ids;  // defaults to item_1..item_n
  std::size_t n_takers = 0;
  double ability_mean = 0.0;
  double ability_sd = 1.0;
  std::uint64_t seed = 0;
};

// Parses {items: [{scale_id, a, b, c, item_id?}], n_takers, ability_mean,
// ability_sd, seed}. Throws ValidationError / ParseError.
SimulatorSpec simulator_spec_from_json(const nlohmann::json& spec);
nlohmann::json simulator_sidecar(const SimulatorSpec& spec);

// Draws abilities from Normal(ability_mean, ability_sd), then responses.
ResponseMatrix simulate_population(const SimulatorSpec& spec);

}  // namespace mcqpsy
