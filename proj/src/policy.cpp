#include "adaptsense/policy.hpp"

#include <algorithm>
#include <cmath>

namespace adaptsense {

namespace {

constexpr double kLogFloor = 1e-300;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Forward {
    Eigen::VectorXd hidden;
    double rho;
    double rhoSlope;  // d rho / d z2 = sigmoid(z) sigmoid(-z)
};

Forward forward(const PolicyParams& p, const PolicyFeatures& f) {
    require(p.W1.rows() == p.b1.size() && p.W1.cols() == kFeatureCount && p.w2.size() == p.b1.size(),
            "policy: inconsistent parameter shapes");
    Forward out;
    out.hidden = (p.W1 * f.vector() + p.b1).array().tanh().matrix();
    const double z = p.w2.dot(out.hidden) + p.b2;
    out.rho = sigmoid(z);
    out.rhoSlope = sigmoid(z) * sigmoid(-z);
    return out;
}

} // namespace

PolicyFeatures extractFeatures(std::size_t prevAction, const ObservedSet& observedPrev,
                               const ObservedSet& observedCur, double lossPrevOnPrev, double lossCurOnPrev,
                               double lossCurOnCur) {
    PolicyFeatures f;
    f.f1 = observedPrev.contains(prevAction) ? 1.0 : 0.0;
    if (observedPrev.empty() || lossPrevOnPrev < kFeatureLossFloor) return f;
    const double sizePrev = static_cast<double>(observedPrev.size());
    const double sizeCur = static_cast<double>(observedCur.size());
    f.f2 = (lossCurOnPrev - lossPrevOnPrev) / lossPrevOnPrev;
    f.f3 = (lossCurOnCur - lossPrevOnPrev) / lossPrevOnPrev;
    f.f4 = (sizeCur * lossCurOnCur - sizePrev * lossPrevOnPrev) / (sizePrev * lossPrevOnPrev);
    return f;
}

PolicyParams PolicyParams::zeros(Eigen::Index hidden) {
    require(hidden >= 1, "PolicyParams: hidden width must be >= 1");
    return {Eigen::MatrixXd::Zero(hidden, kFeatureCount), Eigen::VectorXd::Zero(hidden),
            Eigen::RowVectorXd::Zero(hidden), 0.0};
}

PolicyParams PolicyParams::random(Eigen::Index hidden, RandomStream& rng, double scale) {
    auto p = zeros(hidden);
    auto draw = [&] { return rng.uniform(-scale, scale); };
    for (Eigen::Index r = 0; r < hidden; ++r)
        for (Eigen::Index c = 0; c < kFeatureCount; ++c) p.W1(r, c) = draw();
    for (auto& v : p.b1) v = draw();
    for (auto& v : p.w2) v = draw();
    p.b2 = draw();
    return p;
}

Eigen::VectorXd PolicyParams::flatten() const {
    Eigen::VectorXd flat(parameterCount());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < W1.rows(); ++r)
        for (Eigen::Index c = 0; c < W1.cols(); ++c) flat[k++] = W1(r, c);
    for (auto v : b1) flat[k++] = v;
    for (auto v : w2) flat[k++] = v;
    flat[k] = b2;
    return flat;
}

PolicyParams PolicyParams::unflatten(Eigen::Index hidden, const Eigen::VectorXd& flat) {
    auto p = zeros(hidden);
    require(flat.size() == p.parameterCount(), "PolicyParams::unflatten: length does not match hidden width");
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < hidden; ++r)
        for (Eigen::Index c = 0; c < kFeatureCount; ++c) p.W1(r, c) = flat[k++];
    for (auto& v : p.b1) v = flat[k++];
    for (auto& v : p.w2) v = flat[k++];
    p.b2 = flat[k];
    return p;
}

void PolicyParams::validate() const {
    require(hidden() >= 1 && W1.rows() == hidden() && W1.cols() == kFeatureCount && w2.size() == hidden(),
            "PolicyParams: inconsistent shapes");
    require(flatten().allFinite(), "PolicyParams: non-finite entry");
}

PolicyParams& PolicyParams::operator+=(const PolicyParams& o) {
    require(o.hidden() == hidden(), "PolicyParams: hidden width mismatch");
    W1 += o.W1;
    b1 += o.b1;
    w2 += o.w2;
    b2 += o.b2;
    return *this;
}

PolicyParams& PolicyParams::operator*=(double s) {
    W1 *= s;
    b1 *= s;
    w2 *= s;
    b2 *= s;
    return *this;
}

bool PolicyParams::operator==(const PolicyParams& o) const {
    return hidden() == o.hidden() && W1 == o.W1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
}

PolicyParams operator+(PolicyParams a, const PolicyParams& b) { return a += b; }
PolicyParams operator*(double s, PolicyParams a) { return a *= s; }

double forwardRho(const PolicyParams& params, const PolicyFeatures& feats) {
    return forward(params, feats).rho;
}

double actionProbability(double rho, std::size_t action, const SamplingDistribution& observedLaw, std::size_t n) {
    require(observedLaw.size() == n, "actionProbability: law size differs from n");
    require(action < n, "actionProbability: action out of range");
    return rho / static_cast<double>(n) + (1.0 - rho) * observedLaw[action];
}

double actionLogProb(const PolicyParams& params, const PolicyFeatures& feats, std::size_t action,
                     const SamplingDistribution& observedLaw, std::size_t n) {
    const double rho = forwardRho(params, feats);
    return std::log(std::max(actionProbability(rho, action, observedLaw, n), kLogFloor));
}

PolicyParams logProbGradient(const PolicyParams& params, const PolicyFeatures& feats, std::size_t action,
                             const SamplingDistribution& observedLaw, std::size_t n) {
    const auto fw = forward(params, feats);
    const double prob = std::max(actionProbability(fw.rho, action, observedLaw, n), kLogFloor);
    const double dLogDRho = (1.0 / static_cast<double>(n) - observedLaw[action]) / prob;
    const double dz2 = dLogDRho * fw.rhoSlope;

    PolicyParams g;
    g.b2 = dz2;
    g.w2 = dz2 * fw.hidden.transpose();
    const Eigen::VectorXd dz1 =
        (dz2 * params.w2.transpose()).cwiseProduct((1.0 - fw.hidden.array().square()).matrix());
    g.b1 = dz1;
    g.W1 = dz1 * feats.vector().transpose();
    return g;
}

} // namespace adaptsense
