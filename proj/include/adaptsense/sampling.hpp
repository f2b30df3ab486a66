#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adaptsense/field.hpp"
#include "adaptsense/learner.hpp"
#include "adaptsense/rng.hpp"

namespace adaptsense {

/// Gradient norms at or below this are treated as exactly zero.
inline constexpr double kZeroGradientNorm = 1e-15;

/// A probability vector over sensors. Construction checks the simplex
/// invariant: entries >= 0 and sum within 1e-12 of one.
class SamplingDistribution {
public:
    static constexpr double kTolerance = 1e-12;

    explicit SamplingDistribution(Eigen::VectorXd probs);

    const Eigen::VectorXd& probs() const { return probs_; }
    double operator[](std::size_t i) const { return probs_[static_cast<Eigen::Index>(i)]; }
    std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }
    double entropy() const;

private:
    Eigen::VectorXd probs_;
};

/// Sensors the fusion center has already paid to read, in first-read order.
class ObservedSet {
public:
    explicit ObservedSet(std::size_t sensorCount = 0) : member_(sensorCount, false) {}

    /// Adds `i`; returns true if it was not yet present.
    bool insert(std::size_t i);
    bool contains(std::size_t i) const { return i < member_.size() && member_[i]; }

    std::size_t size() const { return order_.size(); }
    bool empty() const { return order_.empty(); }
    std::size_t capacity() const { return member_.size(); }
    std::span<const std::size_t> indices() const { return order_; }

    bool operator==(const ObservedSet&) const = default;

private:
    std::vector<std::size_t> order_;
    std::vector<bool> member_;
};

SamplingDistribution uniformLaw(std::size_t n);

/// Uniform over the members of `observed` (zero elsewhere).
SamplingDistribution uniformOverObserved(const ObservedSet& observed);

/// g_i / sum g with g_i = ||grad L_i(w)|| for observed i and 0 otherwise.
/// Returns nullopt when the law is degenerate (empty set or all g_i zero).
std::optional<SamplingDistribution> importanceLaw(const ModelState& state, const ObservedSet& observed,
                                                  const FieldTask& task);

/// importanceLaw with the fallback contract applied: uniform over the observed
/// set when every observed gradient vanishes, uniform over all n when nothing
/// has been observed.
SamplingDistribution importanceLawOrFallback(const ModelState& state, const ObservedSet& observed,
                                             const FieldTask& task);

/// Fallback-applied observed law from residuals Phi w - y already in hand.
SamplingDistribution importanceLawOrFallback(const Eigen::VectorXd& residuals, const ObservedSet& observed,
                                             const FieldTask& task);

/// ||grad L_i|| / sum_j ||grad L_j|| over every sensor. nullopt when all
/// gradients vanish.
std::optional<SamplingDistribution> oracleImportanceLaw(const ModelState& state, const FieldTask& task);

/// Per-sensor gradient norms 2 |Phi_i w - y_i| ||Phi_i||.
Eigen::VectorXd gradientNorms(const FieldTask& task, const Eigen::VectorXd& residuals);

/// rho * uniform + (1 - rho) * importance.
SamplingDistribution mixLaws(const SamplingDistribution& uniform, const SamplingDistribution& importance, double rho);

/// Inverse-CDF draw over the fixed index order.
std::size_t drawAction(const SamplingDistribution& law, RandomStream& rng);

} // namespace adaptsense
