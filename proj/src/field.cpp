#include "adaptsense/field.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "adaptsense/rng.hpp"

namespace adaptsense {

namespace {

enum Stream : std::uint64_t { kSupport = 1, kWeights = 2, kLocations = 3, kNoise = 4 };

} // namespace

KernelBasis::KernelBasis(Eigen::VectorXd c, double w) : centers(std::move(c)), width(w) {
    requireConfig(centers.size() >= 1, "KernelBasis: need at least one center");
    requireConfig(width > 0.0 && std::isfinite(width), "KernelBasis: width must be positive");
    for (Eigen::Index j = 1; j < centers.size(); ++j)
        requireConfig(centers[j] > centers[j - 1], "KernelBasis: centers must be strictly increasing");
}

KernelBasis KernelBasis::equallySpaced(Eigen::Index count, double lo, double hi, double width) {
    requireConfig(count >= 1, "KernelBasis: need at least one center");
    requireConfig(count == 1 || hi > lo, "KernelBasis: empty domain");
    Eigen::VectorXd c = count == 1 ? Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.5 * (lo + hi)))
                                   : Eigen::VectorXd(Eigen::VectorXd::LinSpaced(count, lo, hi));
    return {std::move(c), width};
}

Eigen::MatrixXd designMatrix(const KernelBasis& basis, const Eigen::VectorXd& locations) {
    const double invWidth2 = 1.0 / (basis.width * basis.width);
    Eigen::MatrixXd phi(locations.size(), basis.size());
    for (Eigen::Index j = 0; j < basis.size(); ++j)
        phi.col(j) = (-(locations.array() - basis.centers[j]).square() * invWidth2).exp().matrix();
    return phi;
}

void TaskConfig::validate() const {
    requireConfig(kernels >= 1, "TaskConfig: K must be >= 1");
    requireConfig(sparsity >= 1 && sparsity <= kernels, "TaskConfig: kappa must satisfy 1 <= kappa <= K");
    requireConfig(width > 0.0, "TaskConfig: beta must be positive");
    requireConfig(sensors >= 1, "TaskConfig: n must be >= 1");
    requireConfig(noiseStd >= 0.0, "TaskConfig: noise std must be >= 0");
    requireConfig(domain.hi > domain.lo, "TaskConfig: empty domain");
}

double evalField(const FieldEstimate& est, double x) {
    require(est.weights.size() == est.basis.size(), "evalField: weights/basis dimension mismatch");
    return kernelRow(est.basis, x).dot(est.weights);
}

FieldTask::FieldTask(TaskConfig config, std::uint64_t seed, KernelBasis basis, Eigen::VectorXd trueWeights,
                     Eigen::VectorXd locations, Eigen::VectorXd observations)
    : config_(config),
      seed_(seed),
      basis_(std::move(basis)),
      trueWeights_(std::move(trueWeights)),
      locations_(std::move(locations)),
      observations_(std::move(observations)) {
    require(trueWeights_.size() == basis_.size(), "FieldTask: weight count differs from K");
    require(locations_.size() == observations_.size(), "FieldTask: locations/observations length mismatch");
    require(locations_.size() >= 1, "FieldTask: no sensors");
    for (Eigen::Index i = 0; i < locations_.size(); ++i)
        require(config_.domain.contains(locations_[i]), "FieldTask: sensor outside domain");
    const auto nonzero = (trueWeights_.array() != 0.0).count();
    require(nonzero == config_.sparsity, "FieldTask: nonzero weight count differs from kappa");
    design_ = designMatrix(basis_, locations_);
    rowNorms_ = design_.rowwise().norm();
}

FieldTask generateTask(const TaskConfig& config, std::uint64_t seed) {
    config.validate();
    auto basis = KernelBasis::equallySpaced(config.kernels, config.domain.lo, config.domain.hi, config.width);

    // Partial Fisher-Yates picks kappa support indices without replacement.
    auto support = RandomStream::derived(seed, {kSupport});
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(config.kernels));
    std::iota(idx.begin(), idx.end(), 0);
    for (Eigen::Index k = 0; k < config.sparsity; ++k) {
        const auto j = static_cast<std::size_t>(k) + support.index(idx.size() - static_cast<std::size_t>(k));
        std::swap(idx[static_cast<std::size_t>(k)], idx[j]);
    }
    std::sort(idx.begin(), idx.begin() + config.sparsity);

    auto weightStream = RandomStream::derived(seed, {kWeights});
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(config.kernels);
    for (Eigen::Index k = 0; k < config.sparsity; ++k) {
        double w = 0.0;
        while (w == 0.0) w = weightStream.normal();
        weights[idx[static_cast<std::size_t>(k)]] = w;
    }

    auto locStream = RandomStream::derived(seed, {kLocations});
    Eigen::VectorXd locations(config.sensors);
    for (auto& x : locations) x = locStream.uniform(config.domain.lo, config.domain.hi);

    Eigen::VectorXd y = designMatrix(basis, locations) * weights;
    if (config.noiseStd > 0.0) {
        auto noiseStream = RandomStream::derived(seed, {kNoise});
        for (auto& v : y) v += config.noiseStd * noiseStream.normal();
    }
    return {config, seed, std::move(basis), std::move(weights), std::move(locations), std::move(y)};
}

double upsilonNorm(const FieldTask& task) {
    const auto absY = task.observations().cwiseAbs();
    const double peak = absY.maxCoeff();
    if (!(peak > 0.0)) throw UndefinedQuantity("upsilonNorm: all observations are zero");
    return absY.sum() / peak;
}

double predictedGainRatio(const FieldTask& task) {
    const double ratio = static_cast<double>(task.sensorCount()) / upsilonNorm(task);
    return ratio * ratio;
}

Eigen::VectorXd trueSlopeMagnitudes(const FieldTask& task, double h) {
    const auto truth = task.truth();
    Eigen::VectorXd slopes(task.sensorCount());
    for (Eigen::Index i = 0; i < slopes.size(); ++i) {
        const double x = task.locations()[i];
        slopes[i] = std::abs(evalField(truth, x + h) - evalField(truth, x - h)) / (2.0 * h);
    }
    return slopes;
}

} // namespace adaptsense
