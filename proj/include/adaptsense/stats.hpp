#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace adaptsense {

double mean(std::span<const double> xs);

/// Ranks starting at 1; ties share their average rank.
std::vector<double> averageRanks(std::span<const double> xs);

double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation (Pearson on average ranks). Throws
/// UndefinedQuantity when either input has fewer than two distinct values.
double spearman(std::span<const double> x, std::span<const double> y);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap interval for the mean.
Interval bootstrapMeanInterval(std::span<const double> xs, double confidence, std::size_t resamples,
                               std::uint64_t seed);

} // namespace adaptsense
