#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "adaptsense/rng.hpp"
#include "adaptsense/sampling.hpp"

namespace adaptsense {

inline constexpr Eigen::Index kFeatureCount = 4;

/// Inputs of the mixing network.
///   f1: the previous action re-read an already observed sensor
///   f2: relative change of the old-set loss caused by the last update
///   f3: relative change from the old-set loss before to the new-set loss after
///   f4: same as f3 but on summed (size-weighted) losses
struct PolicyFeatures {
    double f1 = 0.0;
    double f2 = 0.0;
    double f3 = 0.0;
    double f4 = 0.0;

    Eigen::Vector4d vector() const { return {f1, f2, f3, f4}; }
    bool operator==(const PolicyFeatures&) const = default;
};

/// Losses below this make the relative-change features meaningless; they are
/// emitted as zero.
inline constexpr double kFeatureLossFloor = 1e-12;

/// Features seen before the first action of `prevAction`'s successor.
///
/// `observedPrev` is the set before `prevAction` was read, `observedCur`
/// after. The losses are observed-set averages:
/// lossPrevOnPrev = L_{O_prev}(w_prev), lossCurOnPrev = L_{O_prev}(w_cur),
/// lossCurOnCur = L_{O_cur}(w_cur). When `observedPrev` is empty pass 0 for
/// the first two; the floor then zeroes f2..f4.
PolicyFeatures extractFeatures(std::size_t prevAction, const ObservedSet& observedPrev,
                               const ObservedSet& observedCur, double lossPrevOnPrev, double lossCurOnPrev,
                               double lossCurOnCur);

/// Weights of rho = sigmoid(w2 . tanh(W1 f + b1) + b2).
struct PolicyParams {
    Eigen::MatrixXd W1;  // H x 4
    Eigen::VectorXd b1;  // H
    Eigen::RowVectorXd w2;  // 1 x H
    double b2 = 0.0;

    static PolicyParams zeros(Eigen::Index hidden);
    /// Entries i.i.d. uniform on [-scale, scale].
    static PolicyParams random(Eigen::Index hidden, RandomStream& rng, double scale = 0.1);

    Eigen::Index hidden() const { return b1.size(); }
    Eigen::Index parameterCount() const { return hidden() * (kFeatureCount + 2) + 1; }

    /// Layout: W1 row-major, b1, w2, b2.
    Eigen::VectorXd flatten() const;
    static PolicyParams unflatten(Eigen::Index hidden, const Eigen::VectorXd& flat);

    void validate() const;

    PolicyParams& operator+=(const PolicyParams& o);
    PolicyParams& operator*=(double s);
    bool operator==(const PolicyParams& o) const;
};

PolicyParams operator+(PolicyParams a, const PolicyParams& b);
PolicyParams operator*(double s, PolicyParams a);

double forwardRho(const PolicyParams& params, const PolicyFeatures& feats);

/// Probability of `action` under rho/n + (1 - rho) * observedLaw[action].
double actionProbability(double rho, std::size_t action, const SamplingDistribution& observedLaw, std::size_t n);

double actionLogProb(const PolicyParams& params, const PolicyFeatures& feats, std::size_t action,
                     const SamplingDistribution& observedLaw, std::size_t n);

/// Exact gradient of actionLogProb with respect to every parameter.
PolicyParams logProbGradient(const PolicyParams& params, const PolicyFeatures& feats, std::size_t action,
                             const SamplingDistribution& observedLaw, std::size_t n);

} // namespace adaptsense
