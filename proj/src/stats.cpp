#include "adaptsense/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adaptsense/errors.hpp"
#include "adaptsense/rng.hpp"

namespace adaptsense {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw UndefinedQuantity("mean of empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::vector<double> averageRanks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "pearson: length mismatch");
    if (x.size() < 2) throw UndefinedQuantity("pearson: need at least two points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedQuantity("pearson: constant input");
    return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = averageRanks(x);
    const auto ry = averageRanks(y);
    return pearson(rx, ry);
}

Interval bootstrapMeanInterval(std::span<const double> xs, double confidence, std::size_t resamples,
                               std::uint64_t seed) {
    if (xs.empty()) throw UndefinedQuantity("bootstrap of empty sample");
    require(confidence > 0.0 && confidence < 1.0, "bootstrap: confidence must be in (0,1)");
    require(resamples >= 10, "bootstrap: too few resamples");
    RandomStream rng(seed);
    std::vector<double> means(resamples);
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) s += xs[rng.index(xs.size())];
        m = s / static_cast<double>(xs.size());
    }
    std::sort(means.begin(), means.end());
    const double tail = 0.5 * (1.0 - confidence);
    auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1)));
        return means[std::min(idx, resamples - 1)];
    };
    return {at(tail), at(1.0 - tail)};
}

} // namespace adaptsense
