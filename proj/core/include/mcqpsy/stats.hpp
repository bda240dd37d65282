#pragma once

#include <span>
#include <vector>

namespace mcqpsy::stats {

double mean(std::span<const double> values);

// Sample Pearson correlation. Throws UndefinedStatisticError on length
// mismatch, fewer than 2 points or zero variance in either vector.
double pearson_r(std::span<const double> x, std::span<const double> y);

// Linear-interpolation quantile (the R type 7 / numpy default) of an
// ascending-sorted sample; prob in [0, 1].
double sorted_quantile(std::span<const double> sorted, double prob);

}  // namespace mcqpsy::stats
