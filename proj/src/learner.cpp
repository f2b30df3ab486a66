#include "adaptsense/learner.hpp"

#include <cmath>
#include <string>

namespace adaptsense {

void LearnerConfig::validate() const {
    requireConfig(gamma > 0.0 && std::isfinite(gamma), "LearnerConfig: gamma must be positive");
    requireConfig(stepScale > 0.0 && std::isfinite(stepScale), "LearnerConfig: stepScale must be positive");
}

double sampleLoss(const FieldEstimate& est, double x, double y) {
    const double r = evalField(est, x) - y;
    return r * r;
}

Eigen::VectorXd sampleGradient(const FieldEstimate& est, double x, double y) {
    require(est.weights.size() == est.basis.size(), "sampleGradient: weights/basis dimension mismatch");
    return gradientFromRow(kernelRow(est.basis, x), est.weights, y);
}

Eigen::VectorXd residuals(const FieldTask& task, const Eigen::VectorXd& weights) {
    require(weights.size() == task.kernelCount(), "residuals: weight dimension differs from K");
    return task.design() * weights - task.observations();
}

double averageLoss(const Eigen::VectorXd& residuals, std::span<const std::size_t> indices) {
    if (indices.empty()) throw UndefinedQuantity("averageLoss: empty index set");
    double s = 0.0;
    for (auto i : indices) {
        require(static_cast<Eigen::Index>(i) < residuals.size(), "averageLoss: sensor index out of range");
        s += residuals[static_cast<Eigen::Index>(i)] * residuals[static_cast<Eigen::Index>(i)];
    }
    return s / static_cast<double>(indices.size());
}

double averageLoss(const FieldEstimate& est, std::span<const std::size_t> indices, const FieldTask& task) {
    if (indices.empty()) throw UndefinedQuantity("averageLoss: empty index set");
    double s = 0.0;
    for (auto i : indices) {
        require(static_cast<Eigen::Index>(i) < task.sensorCount(), "averageLoss: sensor index out of range");
        const auto k = static_cast<Eigen::Index>(i);
        s += sampleLoss(est, task.locations()[k], task.observations()[k]);
    }
    return s / static_cast<double>(indices.size());
}

double fullLoss(const FieldTask& task, const Eigen::VectorXd& weights) {
    return residuals(task, weights).squaredNorm() / static_cast<double>(task.sensorCount());
}

double objective(const FieldTask& task, const Eigen::VectorXd& weights, double gamma) {
    return fullLoss(task, weights) + gamma * weights.lpNorm<1>();
}

namespace {

void checkProbability(double p, const char* where) {
    if (!(p > 0.0 && p <= 1.0))
        throw ContractViolation(std::string(where) + ": sampling probability must be in (0, 1], got " +
                                std::to_string(p));
}

// Multiplier of Phi_i^T in the stochastic gradient.
double gradientScale(const FieldTask& task, double samplingProb, const LearnerConfig& config, double residual) {
    double scale = 2.0 * residual;
    if (config.importanceWeighting) scale /= static_cast<double>(task.sensorCount()) * samplingProb;
    return scale;
}

} // namespace

Eigen::VectorXd gradientEstimate(const Eigen::VectorXd& weights, const FieldTask& task, std::size_t index,
                                 double samplingProb, const LearnerConfig& config) {
    checkProbability(samplingProb, "gradientEstimate");
    const auto i = static_cast<Eigen::Index>(index);
    require(i < task.sensorCount(), "gradientEstimate: sensor index out of range");
    require(weights.size() == task.kernelCount(), "gradientEstimate: weight dimension differs from K");
    const double residual = task.design().row(i).dot(weights) - task.observations()[i];
    return gradientScale(task, samplingProb, config, residual) * task.design().row(i).transpose();
}

ModelState proximalStep(const ModelState& state, const FieldTask& task, std::size_t index, double samplingProb,
                        const LearnerConfig& config) {
    require(static_cast<Eigen::Index>(index) < task.sensorCount(), "proximalStep: sensor index out of range");
    require(state.weights.size() == task.kernelCount(), "proximalStep: weight dimension differs from K");
    const auto i = static_cast<Eigen::Index>(index);
    const double residual = task.design().row(i).dot(state.weights) - task.observations()[i];
    return proximalStep(state, task, index, samplingProb, config, residual);
}

ModelState proximalStep(const ModelState& state, const FieldTask& task, std::size_t index, double samplingProb,
                        const LearnerConfig& config, double residual) {
    checkProbability(samplingProb, "proximalStep");
    require(state.step >= 1, "proximalStep: step counter must start at 1");
    const auto i = static_cast<Eigen::Index>(index);
    require(i < task.sensorCount(), "proximalStep: sensor index out of range");

    const double eta = config.stepSize(state.step);
    const double scale = gradientScale(task, samplingProb, config, residual);
    ModelState next;
    next.weights = softThreshold(state.weights - eta * scale * task.design().row(i).transpose(), config.gamma * eta);
    next.step = state.step + 1;
    return next;
}

} // namespace adaptsense
