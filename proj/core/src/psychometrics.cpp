#include "mcqpsy/psychometrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mcqpsy/error.hpp"
#include "mcqpsy/stats.hpp"

namespace mcqpsy {

using nlohmann::json;

namespace {

ResponseMatrix simulate_labelled(std::span<const IrtItemParams> params,
                                 std::span<const double> thetas,
                                 std::uint64_t seed,
                                 std::vector<std::string> item_ids) {
  if (params.empty() || thetas.empty()) {
    throw ValidationError("simulation needs at least one item and one taker");
  }
  for (const auto& p : params) validate_irt_params(p);
  ResponseMatrix matrix(thetas.size(), std::move(item_ids));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t p = 0; p < thetas.size(); ++p) {
    if (!std::isfinite(thetas[p])) throw ValidationError("ability must be finite");
    for (std::size_t i = 0; i < params.size(); ++i) {
      matrix.set(p, i, unit(rng) < icc_3pl(params[i], thetas[p]) ? 1 : 0);
    }
  }
  return matrix;
}

}  // namespace

double item_facility(const ResponseDistribution& dist, int correct_index) {
  return dist[static_cast<std::size_t>(correct_index)];
}

ResponseMatrix::ResponseMatrix(std::size_t persons, std::vector<std::string> item_ids)
    : persons_(persons), item_ids_(std::move(item_ids)) {
  std::set<std::string> unique(item_ids_.begin(), item_ids_.end());
  if (unique.size() != item_ids_.size()) {
    throw ValidationError("response matrix column labels must be unique");
  }
  scores_.assign(persons_ * item_ids_.size(), 0);
}

void ResponseMatrix::set(std::size_t person, std::size_t item, int score) {
  if (score != 0 && score != 1) throw std::invalid_argument("score must be 0 or 1");
  scores_.at(person * items() + item) = static_cast<std::uint8_t>(score);
}

std::vector<double> ResponseMatrix::column(std::size_t item) const {
  std::vector<double> out(persons_);
  for (std::size_t p = 0; p < persons_; ++p) out[p] = at(p, item);
  return out;
}

std::vector<double> ResponseMatrix::totals() const {
  std::vector<double> out(persons_, 0.0);
  for (std::size_t p = 0; p < persons_; ++p) {
    for (std::size_t i = 0; i < items(); ++i) out[p] += at(p, i);
  }
  return out;
}

double ResponseMatrix::column_mean(std::size_t item) const {
  if (persons_ == 0) throw UndefinedStatisticError("empty response matrix");
  std::size_t correct = 0;
  for (std::size_t p = 0; p < persons_; ++p) correct += at(p, item);
  return static_cast<double>(correct) / static_cast<double>(persons_);
}

void ResponseMatrix::write_csv(std::ostream& out) const {
  for (std::size_t i = 0; i < items(); ++i) out << (i ? "," : "") << item_ids_[i];
  out << '\n';
  std::string row(items() * 2, ',');
  for (std::size_t p = 0; p < persons_; ++p) {
    for (std::size_t i = 0; i < items(); ++i) {
      row[2 * i] = at(p, i) ? '1' : '0';
    }
    row.back() = '\n';
    out << row;
  }
}

double item_discrimination(const ResponseMatrix& matrix, std::size_t item,
                           DiscriminationMode mode) {
  if (item >= matrix.items()) throw std::out_of_range("item column out of range");
  if (matrix.persons() < 3) {
    throw UndefinedStatisticError("discrimination needs at least 3 persons");
  }
  std::vector<double> scores = matrix.column(item);
  std::vector<double> totals = matrix.totals();
  if (mode == DiscriminationMode::kRestScore) {
    for (std::size_t p = 0; p < totals.size(); ++p) totals[p] -= scores[p];
  }
  return stats::pearson_r(scores, totals);
}

double icc_3pl(const IrtItemParams& params, double theta) {
  return params.c + (1.0 - params.c) / (1.0 + std::exp(-params.a * (theta - params.b)));
}

double expected_prob_theta0(const IrtItemParams& params) {
  return params.c + (1.0 - params.c) / (1.0 + std::exp(params.a * params.b));
}

ResponseMatrix simulate_response_matrix(std::span<const IrtItemParams> params,
                                        std::span<const double> thetas,
                                        std::uint64_t seed) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ids.push_back("item_" + std::to_string(i + 1));
  }
  return simulate_labelled(params, thetas, seed, std::move(ids));
}

double population_facility(const IrtItemParams& params, double ability_mean,
                           double ability_sd) {
  if (!(ability_sd > 0.0)) throw std::invalid_argument("ability_sd must be > 0");
  // Integrate over the standard normal variable on +-12 sd. Steep ICCs defeat
  // fixed Gauss-Hermite rules, so use adaptive Gauss-Kronrod and split the
  // range at the ICC midpoint.
  constexpr double kSpan = 12.0;
  auto integrand = [&](double z) {
    return std::exp(-0.5 * z * z) * icc_3pl(params, ability_mean + ability_sd * z);
  };
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double split = std::clamp((params.b - ability_mean) / ability_sd, -kSpan, kSpan);
  double total = 0.0;
  if (split > -kSpan) total += Rule::integrate(integrand, -kSpan, split, 20, 1e-14);
  if (split < kSpan) total += Rule::integrate(integrand, split, kSpan, 20, 1e-14);
  return total / std::sqrt(2.0 * std::numbers::pi);
}

SimulatorSpec simulator_spec_from_json(const json& spec) {
  SimulatorSpec out;
  try {
    for (const json& entry : spec.at("items")) {
      IrtItemParams p;
      p.scale_id = entry.value("scale_id", std::string("default"));
      p.a = entry.at("a").get<double>();
      p.b = entry.at("b").get<double>();
      p.c = entry.at("c").get<double>();
      validate_irt_params(p);
      out.items.push_back(std::move(p));
      out.item_ids.push_back(entry.value(
          "item_id", "item_" + std::to_string(out.items.size())));
    }
    auto n_takers = spec.at("n_takers").get<long long>();
    if (n_takers <= 0) throw ValidationError("n_takers must be positive");
    out.n_takers = static_cast<std::size_t>(n_takers);
    out.ability_mean = spec.value("ability_mean", 0.0);
    out.ability_sd = spec.value("ability_sd", 1.0);
    out.seed = spec.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("simulator spec: ") + e.what(), 0);
  }
  if (out.items.empty()) throw ValidationError("simulator spec has no items");
  if (!(out.ability_sd > 0.0) || !std::isfinite(out.ability_mean)) {
    throw ValidationError("ability_sd must be > 0 and ability_mean finite");
  }
  return out;
}

json simulator_sidecar(const SimulatorSpec& spec) {
  json items = json::array();
  for (std::size_t i = 0; i < spec.items.size(); ++i) {
    const auto& p = spec.items[i];
    items.push_back({{"item_id", spec.item_ids[i]},
                     {"scale_id", p.scale_id},
                     {"a", p.a},
                     {"b", p.b},
                     {"c", p.c},
                     {"expected_prob_theta0", expected_prob_theta0(p)},
                     {"population_facility",
                      population_facility(p, spec.ability_mean, spec.ability_sd)}});
  }
  return {{"items", std::move(items)},
          {"n_takers", spec.n_takers},
          {"ability_mean", spec.ability_mean},
          {"ability_sd", spec.ability_sd},
          {"seed", spec.seed}};
}

ResponseMatrix simulate_population(const SimulatorSpec& spec) {
  if (spec.n_takers == 0) throw ValidationError("n_takers must be positive");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> ability(spec.ability_mean, spec.ability_sd);
  std::vector<double> thetas(spec.n_takers);
  for (double& t : thetas) t = ability(rng);
  // Response draws use their own stream, seeded from the ability stream.
  if (spec.item_ids.empty()) return simulate_response_matrix(spec.items, thetas, rng());
  return simulate_labelled(spec.items, thetas, rng(), spec.item_ids);
}

}  // namespace mcqpsy
