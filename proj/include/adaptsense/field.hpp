#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "adaptsense/errors.hpp"

namespace adaptsense {

/// Gaussian RBF dictionary on the line: phi_j(x) = exp(-(x - c_j)^2 / width^2).
struct KernelBasis {
    Eigen::VectorXd centers;
    double width = 0.0;

    KernelBasis() = default;
    KernelBasis(Eigen::VectorXd c, double w);

    /// K centers equally spaced on [lo, hi], endpoints included.
    static KernelBasis equallySpaced(Eigen::Index count, double lo, double hi, double width);

    Eigen::Index size() const { return centers.size(); }
};

/// Row vector Phi(x) of kernel responses.
template <typename Scalar = double>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> kernelRow(const KernelBasis& basis, Scalar x) {
    const Scalar invWidth2 = Scalar(1) / (Scalar(basis.width) * Scalar(basis.width));
    return (-(basis.centers.template cast<Scalar>().array() - x).square() * invWidth2)
        .exp()
        .transpose()
        .matrix();
}

/// n x K design matrix whose i-th row is Phi(locations_i).
Eigen::MatrixXd designMatrix(const KernelBasis& basis, const Eigen::VectorXd& locations);

struct Interval1d {
    double lo = -5.0;
    double hi = 5.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
    double width() const { return hi - lo; }
};

struct TaskConfig {
    Eigen::Index kernels = 50;   // K
    Eigen::Index sparsity = 4;   // kappa, nonzero weights
    double width = 0.4;          // beta
    Eigen::Index sensors = 500;  // n
    double noiseStd = 0.1;
    Interval1d domain{};

    void validate() const;
};

/// A weight vector over a basis; the field estimate f(x) = Phi(x) w.
struct FieldEstimate {
    KernelBasis basis;
    Eigen::VectorXd weights;
};

double evalField(const FieldEstimate& est, double x);

/// One synthetic sensing problem. Holds the materialized arrays plus a cached
/// design matrix and its row norms, which every learner step needs.
class FieldTask {
public:
    FieldTask(TaskConfig config, std::uint64_t seed, KernelBasis basis, Eigen::VectorXd trueWeights,
              Eigen::VectorXd locations, Eigen::VectorXd observations);

    const TaskConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    const KernelBasis& basis() const { return basis_; }
    const Eigen::VectorXd& trueWeights() const { return trueWeights_; }
    const Eigen::VectorXd& locations() const { return locations_; }
    const Eigen::VectorXd& observations() const { return observations_; }
    const Eigen::MatrixXd& design() const { return design_; }
    const Eigen::VectorXd& rowNorms() const { return rowNorms_; }

    Eigen::Index sensorCount() const { return locations_.size(); }
    Eigen::Index kernelCount() const { return basis_.size(); }

    FieldEstimate truth() const { return {basis_, trueWeights_}; }

private:
    TaskConfig config_;
    std::uint64_t seed_;
    KernelBasis basis_;
    Eigen::VectorXd trueWeights_;
    Eigen::VectorXd locations_;
    Eigen::VectorXd observations_;
    Eigen::MatrixXd design_;
    Eigen::VectorXd rowNorms_;
};

/// Draws a task. Weights, locations and noise come from separate sub-streams
/// of `seed`, so e.g. changing the noise level keeps the sensor layout.
FieldTask generateTask(const TaskConfig& config, std::uint64_t seed);

/// sum_i |y_i| / max_i |y_i|, in [1, n].
double upsilonNorm(const FieldTask& task);

/// n^2 max|y|^2 / (sum |y_i|)^2 = (n / upsilonNorm)^2, the predicted
/// importance-over-uniform gain ratio.
double predictedGainRatio(const FieldTask& task);

/// |df/dx| of the true field at each sensor, by central differences.
Eigen::VectorXd trueSlopeMagnitudes(const FieldTask& task, double h = 1e-5);

} // namespace adaptsense
