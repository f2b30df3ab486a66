#include "adaptsense/sampling.hpp"

#include <cmath>
#include <string>

namespace adaptsense {

SamplingDistribution::SamplingDistribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    require(probs_.size() >= 1, "SamplingDistribution: empty support");
    for (auto p : probs_) require(p >= 0.0 && std::isfinite(p), "SamplingDistribution: negative or non-finite entry");
    const double total = probs_.sum();
    if (std::abs(total - 1.0) > kTolerance)
        throw ContractViolation("SamplingDistribution: probabilities sum to " + std::to_string(total));
}

double SamplingDistribution::entropy() const {
    double h = 0.0;
    for (auto p : probs_)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

bool ObservedSet::insert(std::size_t i) {
    require(i < member_.size(), "ObservedSet: index out of range");
    if (member_[i]) return false;
    member_[i] = true;
    order_.push_back(i);
    return true;
}

SamplingDistribution uniformLaw(std::size_t n) {
    if (n == 0) throw ContractViolation("uniformLaw: n must be >= 1");
    return SamplingDistribution(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

SamplingDistribution uniformOverObserved(const ObservedSet& observed) {
    if (observed.empty()) throw ContractViolation("uniformOverObserved: empty observed set");
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(observed.capacity()));
    const double mass = 1.0 / static_cast<double>(observed.size());
    for (auto i : observed.indices()) p[static_cast<Eigen::Index>(i)] = mass;
    return SamplingDistribution(std::move(p));
}

Eigen::VectorXd gradientNorms(const FieldTask& task, const Eigen::VectorXd& residuals) {
    require(residuals.size() == task.sensorCount(), "gradientNorms: residual length differs from n");
    Eigen::VectorXd g = 2.0 * residuals.cwiseAbs().cwiseProduct(task.rowNorms());
    for (auto& v : g)
        if (v <= kZeroGradientNorm) v = 0.0;
    return g;
}

namespace {

std::optional<SamplingDistribution> normalize(Eigen::VectorXd g) {
    const double total = g.sum();
    if (!(total > 0.0)) return std::nullopt;
    g /= total;
    return SamplingDistribution(std::move(g));
}

} // namespace

std::optional<SamplingDistribution> importanceLaw(const ModelState& state, const ObservedSet& observed,
                                                  const FieldTask& task) {
    require(observed.capacity() == static_cast<std::size_t>(task.sensorCount()),
            "importanceLaw: observed set built for a different sensor count");
    if (observed.empty()) return std::nullopt;
    const Eigen::VectorXd r = residuals(task, state.weights);
    const Eigen::VectorXd norms = gradientNorms(task, r);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(task.sensorCount());
    for (auto i : observed.indices()) g[static_cast<Eigen::Index>(i)] = norms[static_cast<Eigen::Index>(i)];
    return normalize(std::move(g));
}

SamplingDistribution importanceLawOrFallback(const ModelState& state, const ObservedSet& observed,
                                             const FieldTask& task) {
    if (observed.empty()) return uniformLaw(static_cast<std::size_t>(task.sensorCount()));
    if (auto law = importanceLaw(state, observed, task)) return *std::move(law);
    return uniformOverObserved(observed);
}

SamplingDistribution importanceLawOrFallback(const Eigen::VectorXd& residuals, const ObservedSet& observed,
                                             const FieldTask& task) {
    if (observed.empty()) return uniformLaw(static_cast<std::size_t>(task.sensorCount()));
    const Eigen::VectorXd norms = gradientNorms(task, residuals);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(task.sensorCount());
    for (auto i : observed.indices()) g[static_cast<Eigen::Index>(i)] = norms[static_cast<Eigen::Index>(i)];
    if (auto law = normalize(std::move(g))) return *std::move(law);
    return uniformOverObserved(observed);
}

std::optional<SamplingDistribution> oracleImportanceLaw(const ModelState& state, const FieldTask& task) {
    return normalize(gradientNorms(task, residuals(task, state.weights)));
}

SamplingDistribution mixLaws(const SamplingDistribution& uniform, const SamplingDistribution& importance, double rho) {
    require(uniform.size() == importance.size(), "mixLaws: laws over different sensor counts");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ContractViolation("mixLaws: rho must lie in [0, 1]");
    if (rho == 1.0) return uniform;
    if (rho == 0.0) return importance;
    return SamplingDistribution(rho * uniform.probs() + (1.0 - rho) * importance.probs());
}

std::size_t drawAction(const SamplingDistribution& law, RandomStream& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t lastPositive = 0;
    for (std::size_t i = 0; i < law.size(); ++i) {
        const double p = law[i];
        if (p <= 0.0) continue;
        lastPositive = i;
        cumulative += p;
        if (u < cumulative) return i;
    }
    // u landed in the rounding gap above the accumulated total.
    return lastPositive;
}

} // namespace adaptsense
