#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "adaptsense/errors.hpp"
#include "adaptsense/parallel.hpp"
#include "adaptsense/rng.hpp"
#include "adaptsense/stats.hpp"

using namespace adaptsense;

TEST_CASE("derived seeds are stable and path-sensitive") {
    CHECK(deriveSeed(1, {2, 3}) == deriveSeed(1, {2, 3}));
    CHECK(deriveSeed(1, {2, 3}) != deriveSeed(1, {3, 2}));
    CHECK(deriveSeed(1, {2}) != deriveSeed(2, {2}));
    CHECK(deriveSeed(1, {}) != deriveSeed(1, {0}));
}

TEST_CASE("random stream replays and stays in range") {
    auto a = RandomStream::derived(9, {1});
    auto b = RandomStream::derived(9, {1});
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = a.index(7);
        CHECK(k == b.index(7));
        CHECK(k < 7);
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("normal draws have unit moments") {
    auto rng = RandomStream::derived(4, {});
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("index draws are uniform") {
    auto rng = RandomStream::derived(5, {});
    std::vector<int> counts(5, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rng.index(5)];
    for (int c : counts) CHECK(std::abs(c / double(n) - 0.2) < 0.01);
}

TEST_CASE("average ranks share ties") {
    const std::vector<double> xs{3.0, 1.0, 3.0, 2.0};
    const auto r = averageRanks(xs);
    CHECK(r == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("spearman on monotone, reversed and constant data") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> y{1, 4, 9, 16, 25};
    const std::vector<double> z{5, 4, 3, 2, 1};
    CHECK(spearman(x, y) == doctest::Approx(1.0));
    CHECK(spearman(x, z) == doctest::Approx(-1.0));
    const std::vector<double> c{2, 2, 2, 2, 2};
    CHECK_THROWS_AS(spearman(x, c), UndefinedQuantity);
}

TEST_CASE("pearson matches a hand computation") {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> y{1, 3, 2};
    // sum dx dy = 1, sum dx^2 = sum dy^2 = 2
    CHECK(pearson(x, y) == doctest::Approx(0.5));
}

TEST_CASE("bootstrap interval brackets the mean and is reproducible") {
    auto rng = RandomStream::derived(3, {});
    std::vector<double> xs(200);
    for (auto& x : xs) x = 1.0 + rng.normal();
    const auto a = bootstrapMeanInterval(xs, 0.95, 2000, 11);
    const auto b = bootstrapMeanInterval(xs, 0.95, 2000, 11);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    const double m = mean(xs);
    CHECK(a.lo < m);
    CHECK(m < a.hi);
    // Normal-theory half width 1.96 * sd / sqrt(n) ~ 0.139.
    CHECK((a.hi - a.lo) / 2 == doctest::Approx(0.139).epsilon(0.2));
}

TEST_CASE("parallelFor fills every slot and rethrows") {
    std::vector<int> out(100, -1);
    parallelFor(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
    CHECK_THROWS_AS(parallelFor(10, 3,
                                [](std::size_t i) {
                                    if (i == 7) throw ContractViolation("boom");
                                }),
                    ContractViolation);
}
