#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "adaptsense/field.hpp"

namespace adaptsense {

struct LearnerConfig {
    double gamma = 0.08;       // L1 weight
    double stepScale = 0.5;    // eta_t = stepScale / t
    /// Scale the sampled gradient by 1/(n p_i) so its expectation under p is
    /// the full gradient. Off reproduces the plain unweighted update.
    bool importanceWeighting = true;

    void validate() const;
    double stepSize(std::int64_t t) const { return stepScale / static_cast<double>(t); }
};

/// Current iterate w_t and the index t of the next update (starts at 1).
struct ModelState {
    Eigen::VectorXd weights;
    std::int64_t step = 1;

    static ModelState zeros(Eigen::Index kernels) { return {Eigen::VectorXd::Zero(kernels), 1}; }
};

/// sign(v) * max(|v| - threshold, 0), entrywise: the proximal map of threshold * ||.||_1.
template <typename Derived>
auto softThreshold(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar threshold) {
    using Scalar = typename Derived::Scalar;
    return (v.array().sign() * (v.array().abs() - threshold).max(Scalar(0))).matrix();
}

/// (Phi(x) w - y)^2
double sampleLoss(const FieldEstimate& est, double x, double y);

/// Gradient of sampleLoss in w: 2 (Phi(x) w - y) Phi(x)^T. This is the
/// descent-consistent sign; w - eta * gradient lowers the loss for small eta.
Eigen::VectorXd sampleGradient(const FieldEstimate& est, double x, double y);

/// Same gradient from a precomputed kernel row.
template <typename RowDerived, typename WDerived>
Eigen::VectorXd gradientFromRow(const Eigen::MatrixBase<RowDerived>& phi, const Eigen::MatrixBase<WDerived>& w,
                                double y) {
    const double residual = phi.dot(w) - y;
    return 2.0 * residual * phi.transpose();
}

/// Phi w - y over all sensors.
Eigen::VectorXd residuals(const FieldTask& task, const Eigen::VectorXd& weights);

/// Mean squared residual over `indices`; the full set gives L(w).
double averageLoss(const FieldEstimate& est, std::span<const std::size_t> indices, const FieldTask& task);
double averageLoss(const Eigen::VectorXd& residuals, std::span<const std::size_t> indices);

/// L(w) over every sensor.
double fullLoss(const FieldTask& task, const Eigen::VectorXd& weights);

/// L(w) + gamma ||w||_1.
double objective(const FieldTask& task, const Eigen::VectorXd& weights, double gamma);

/// Stochastic gradient from sensor `index` drawn with probability
/// `samplingProb`: grad L_index, divided by n * samplingProb when importance
/// weighting is on.
Eigen::VectorXd gradientEstimate(const Eigen::VectorXd& weights, const FieldTask& task, std::size_t index,
                                 double samplingProb, const LearnerConfig& config);

/// One proximal SGD update with sensor `index` drawn with probability
/// `samplingProb`. `residual` is Phi(x_index) w_t - y_index when the caller
/// already has it.
ModelState proximalStep(const ModelState& state, const FieldTask& task, std::size_t index, double samplingProb,
                        const LearnerConfig& config);
ModelState proximalStep(const ModelState& state, const FieldTask& task, std::size_t index, double samplingProb,
                        const LearnerConfig& config, double residual);

} // namespace adaptsense
