#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "adaptsense/errors.hpp"
#include "adaptsense/learner.hpp"
#include "test_support.hpp"

using namespace adaptsense;
using testsupport::randomVector;
using testsupport::smallTask;

namespace {

KernelBasis paperBasis() { return KernelBasis::equallySpaced(50, -5.0, 5.0, 0.4); }

// Per-coordinate minimizer of thr*|w| + (w - v)^2 / 2 by scanning a grid of
// step 1e-4 around v.
double gridProx(double v, double thr) {
    double best = 0.0, bestVal = thr * 0.0 + 0.5 * v * v;
    const double lo = std::min(v, 0.0) - 1e-3, hi = std::max(v, 0.0) + 1e-3;
    for (double w = lo; w <= hi; w += 1e-4) {
        const double val = thr * std::abs(w) + 0.5 * (w - v) * (w - v);
        if (val < bestVal) {
            bestVal = val;
            best = w;
        }
    }
    return best;
}

double proxObjective(double w, double v, double thr) { return thr * std::abs(w) + 0.5 * (w - v) * (w - v); }

} // namespace

TEST_CASE("sample loss examples") {
    const auto b = paperBasis();
    FieldEstimate zero{b, Eigen::VectorXd::Zero(50)};
    CHECK(sampleLoss(zero, 0.3, 0.0) == 0.0);
    CHECK(sampleLoss(zero, 0.3, 2.0) == 4.0);
    auto rng = RandomStream::derived(1, {});
    for (int i = 0; i < 20; ++i) {
        FieldEstimate est{b, randomVector(rng, 50)};
        const double x = rng.uniform(-5, 5), y = rng.normal();
        const double r = evalField(est, x) - y;
        CHECK(sampleLoss(est, x, y) == doctest::Approx(r * r).epsilon(1e-14));
    }
}

TEST_CASE("sample gradient vanishes at the fit point and has rank-1 norm") {
    const auto b = paperBasis();
    auto rng = RandomStream::derived(2, {});
    FieldEstimate est{b, randomVector(rng, 50)};
    const double x = 0.77;
    CHECK(sampleGradient(est, x, evalField(est, x)).norm() == doctest::Approx(0.0));
    const double y = 1.5;
    const double r = evalField(est, x) - y;
    CHECK(sampleGradient(est, x, y).norm() == doctest::Approx(2.0 * std::abs(r) * kernelRow(b, x).norm()).epsilon(1e-13));
}

TEST_CASE("sample gradient matches central differences") {
    const auto b = paperBasis();
    auto rng = RandomStream::derived(3, {});
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        FieldEstimate est{b, randomVector(rng, 50, 0.5)};
        const double x = rng.uniform(-5, 5), y = rng.normal();
        const auto g = sampleGradient(est, x, y);
        for (Eigen::Index j = 0; j < 50; ++j) {
            FieldEstimate up = est, dn = est;
            up.weights[j] += h;
            dn.weights[j] -= h;
            const double fd = (sampleLoss(up, x, y) - sampleLoss(dn, x, y)) / (2 * h);
            CHECK(testsupport::relClose(g[j], fd, 1e-5, 1e-8));
        }
    }
}

TEST_CASE("per-sample gradients are 2||phi||^2-Lipschitz, tight along phi") {
    const auto b = paperBasis();
    auto rng = RandomStream::derived(4, {});
    for (int trial = 0; trial < 50; ++trial) {
        const double x = rng.uniform(-5, 5), y = rng.normal();
        const auto phi = kernelRow(b, x);
        FieldEstimate a{b, randomVector(rng, 50)}, c{b, randomVector(rng, 50)};
        const double lhs = (sampleGradient(a, x, y) - sampleGradient(c, x, y)).norm();
        CHECK(lhs <= 2.0 * phi.squaredNorm() * (a.weights - c.weights).norm() * (1 + 1e-12));
        FieldEstimate aligned{b, a.weights + 0.3 * phi.transpose()};
        const double lhs2 = (sampleGradient(aligned, x, y) - sampleGradient(a, x, y)).norm();
        CHECK(lhs2 == doctest::Approx(2.0 * phi.squaredNorm() * 0.3 * phi.norm()).epsilon(1e-10));
    }
}

TEST_CASE("average loss") {
    const auto t = smallTask(1, 10);
    FieldEstimate est{t.basis(), Eigen::VectorXd::Zero(50)};
    const std::vector<std::size_t> one{3};
    CHECK(averageLoss(est, one, t) == doctest::Approx(sampleLoss(est, t.locations()[3], t.observations()[3])));
    const std::vector<std::size_t> none;
    CHECK_THROWS_AS(averageLoss(est, none, t), UndefinedQuantity);

    Eigen::VectorXd r(3);
    r << 1.0, std::sqrt(3.0), 7.0;
    const std::vector<std::size_t> two{0, 1};
    CHECK(averageLoss(r, two) == doctest::Approx(2.0));

    const auto clean = smallTask(2, 15, 4, 0.0);
    std::vector<std::size_t> all(15);
    std::iota(all.begin(), all.end(), 0);
    CHECK(averageLoss(clean.truth(), all, clean) == doctest::Approx(0.0).scale(1.0));
    CHECK(fullLoss(clean, clean.trueWeights()) < 1e-28);
    std::vector<std::size_t> everyT(10);
    std::iota(everyT.begin(), everyT.end(), 0);
    CHECK(averageLoss(est, everyT, t) == doctest::Approx(fullLoss(t, est.weights)));
}

TEST_CASE("soft threshold examples") {
    Eigen::Vector2d v(2.0, -0.5);
    CHECK(softThreshold(v, 1.0) == Eigen::Vector2d(1.0, 0.0));
    CHECK(softThreshold(v, 0.0) == v);
    Eigen::Vector3d u(-3.0, 0.2, 1.0);
    CHECK(softThreshold(u, 0.5) == Eigen::Vector3d(-2.5, 0.0, 0.5));
}

TEST_CASE("soft threshold solves the prox problem (grid oracle)") {
    auto rng = RandomStream::derived(5, {});
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd v = randomVector(rng, 8);
        const double thr = rng.uniform(0.0, 1.0);
        const Eigen::VectorXd w = softThreshold(v, thr);
        for (Eigen::Index j = 0; j < v.size(); ++j) {
            const double g = gridProx(v[j], thr);
            CHECK(proxObjective(w[j], v[j], thr) <= proxObjective(g, v[j], thr) + 1e-12);
            CHECK(proxObjective(w[j], v[j], thr) - proxObjective(g, v[j], thr) <= 1e-6);
            CHECK(std::abs(w[j]) <= std::abs(v[j]));
        }
        // l_inf contraction
        const Eigen::VectorXd v2 = randomVector(rng, 8);
        CHECK((softThreshold(v, thr) - softThreshold(v2, thr)).lpNorm<Eigen::Infinity>() <=
              (v - v2).lpNorm<Eigen::Infinity>() + 1e-15);
    }
}

TEST_CASE("step size schedule and config validation") {
    LearnerConfig c;
    CHECK(c.gamma == 0.08);
    CHECK(c.stepSize(1) == 0.5);
    CHECK(c.stepSize(4) == 0.125);
    c.gamma = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = LearnerConfig{};
    c.stepScale = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
}

TEST_CASE("proximal step with a zero gradient only shrinks") {
    // A one-sensor noiseless task fitted exactly: the gradient is zero.
    auto t = smallTask(6, 1, 4, 0.0);
    LearnerConfig cfg;
    ModelState s{t.trueWeights(), 3};
    // Scale the weights so every entry is either 0 (stays) or large (shrinks).
    const double thr = cfg.gamma * cfg.stepSize(3);
    const auto next = proximalStep(s, t, 0, 1.0, cfg);
    CHECK(next.step == 4);
    for (Eigen::Index j = 0; j < 50; ++j) {
        const double w = s.weights[j];
        if (std::abs(w) > thr) CHECK(next.weights[j] == doctest::Approx(w - std::copysign(thr, w)));
        else CHECK(next.weights[j] == 0.0);
    }
}

TEST_CASE("proximal step matches the update by hand") {
    const auto t = smallTask(7, 12);
    auto rng = RandomStream::derived(7, {});
    for (int trial = 0; trial < 20; ++trial) {
        ModelState s{randomVector(rng, 50, 0.3), 1 + static_cast<std::int64_t>(rng.index(20))};
        const auto i = rng.index(12);
        const double p = rng.uniform(0.01, 1.0);
        for (bool weighting : {true, false}) {
            LearnerConfig cfg;
            cfg.importanceWeighting = weighting;
            const double eta = cfg.stepSize(s.step);
            Eigen::VectorXd g = sampleGradient({t.basis(), s.weights}, t.locations()[i], t.observations()[i]);
            if (weighting) g /= 12 * p;
            const Eigen::VectorXd want = softThreshold(s.weights - eta * g, cfg.gamma * eta);
            const auto got = proximalStep(s, t, i, p, cfg);
            CHECK((got.weights - want).norm() <= 1e-12);
            CHECK(got.step == s.step + 1);
        }
    }
}

TEST_CASE("uniform probability makes weighting a no-op") {
    const auto t = smallTask(8, 16);
    ModelState s = ModelState::zeros(50);
    LearnerConfig on, off;
    off.importanceWeighting = false;
    for (std::size_t i = 0; i < 16; ++i) {
        const auto a = proximalStep(s, t, i, 1.0 / 16, on);
        const auto b = proximalStep(s, t, i, 1.0 / 16, off);
        CHECK((a.weights - b.weights).norm() <= 1e-15);
    }
}

TEST_CASE("proximal step rejects bad probabilities") {
    const auto t = smallTask(9, 5);
    const auto s = ModelState::zeros(50);
    LearnerConfig cfg;
    CHECK_THROWS_AS(proximalStep(s, t, 0, 0.0, cfg), ContractViolation);
    CHECK_THROWS_AS(proximalStep(s, t, 0, -0.1, cfg), ContractViolation);
    CHECK_THROWS_AS(proximalStep(s, t, 0, 1.5, cfg), ContractViolation);
}

TEST_CASE("small descent steps reduce the sampled loss") {
    auto rng = RandomStream::derived(10, {});
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = smallTask(100 + trial, 10);
        const Eigen::VectorXd w = randomVector(rng, 50, 0.3);
        const auto i = rng.index(10);
        FieldEstimate est{t.basis(), w};
        const double before = sampleLoss(est, t.locations()[i], t.observations()[i]);
        const auto g = sampleGradient(est, t.locations()[i], t.observations()[i]);
        if (g.norm() == 0.0) continue;
        FieldEstimate after{t.basis(), w - 1e-4 * g};
        CHECK(sampleLoss(after, t.locations()[i], t.observations()[i]) < before);
    }
}

TEST_CASE("repeated steps fit a noiseless single sensor") {
    const auto t = smallTask(11, 1, 4, 0.0);
    LearnerConfig cfg;
    cfg.gamma = 1e-4;
    cfg.importanceWeighting = false;
    // The residual contracts by 1 - 2 eta_t ||phi||^2 per step; keep the first
    // factor in (0, 1) so the loss cannot overshoot.
    cfg.stepScale = 0.4 / t.design().row(0).squaredNorm();
    ModelState s = ModelState::zeros(50);
    FieldEstimate est{t.basis(), s.weights};
    double prev = sampleLoss(est, t.locations()[0], t.observations()[0]);
    for (int k = 0; k < 200; ++k) {
        s = proximalStep(s, t, 0, 1.0, cfg);
        const double cur = sampleLoss({t.basis(), s.weights}, t.locations()[0], t.observations()[0]);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("importance-weighted gradient is unbiased (exhaustive)") {
    auto rng = RandomStream::derived(12, {});
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(19));
        const auto t = smallTask(500 + trial, n);
        const Eigen::VectorXd w = randomVector(rng, 50, 0.3);
        Eigen::VectorXd p(n);
        for (Eigen::Index i = 0; i < n; ++i) p[i] = rng.uniform(0.05, 1.0);
        p /= p.sum();
        Eigen::VectorXd expectation = Eigen::VectorXd::Zero(50), full = Eigen::VectorXd::Zero(50);
        const LearnerConfig cfg;
        for (Eigen::Index i = 0; i < n; ++i) {
            expectation += p[i] * gradientEstimate(w, t, static_cast<std::size_t>(i), p[i], cfg);
            full += sampleGradient({t.basis(), w}, t.locations()[i], t.observations()[i]) / n;
        }
        CHECK((expectation - full).norm() <= 1e-10);
    }
}

TEST_CASE("objective adds the l1 term") {
    const auto t = smallTask(13, 10);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(50, 0.1);
    CHECK(objective(t, w, 0.08) == doctest::Approx(fullLoss(t, w) + 0.08 * 5.0));
}
