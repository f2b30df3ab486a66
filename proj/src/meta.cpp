#include "adaptsense/meta.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "adaptsense/parallel.hpp"

namespace adaptsense {

namespace {

enum Stream : std::uint64_t { kInit = 11, kTrain = 12, kEval = 13 };

} // namespace

void RewardConfig::validate() const {
    requireConfig(mu >= 0.0 && std::isfinite(mu), "RewardConfig: mu must be >= 0");
    requireConfig(lambda >= 0.0 && lambda <= 1.0, "RewardConfig: lambda must lie in [0, 1]");
    requireConfig(alpha > 0.0 && std::isfinite(alpha), "RewardConfig: alpha must be positive");
    requireConfig(clipNorm > 0.0, "RewardConfig: clipNorm must be positive");
}

void MetaTrainConfig::validate() const {
    learner.validate();
    reward.validate();
    requireConfig(hidden >= 1, "MetaTrainConfig: hidden width must be >= 1");
    requireConfig(initScale >= 0.0, "MetaTrainConfig: initScale must be >= 0");
    requireConfig(horizon >= 1, "MetaTrainConfig: horizon must be >= 1");
    requireConfig(evalTasks >= 1 && evalSeeds >= 1, "MetaTrainConfig: need at least one evaluation rollout");
}

std::vector<double> Episode::rewards() const {
    std::vector<double> r;
    r.reserve(steps.size());
    for (const auto& s : steps) r.push_back(s.reward);
    return r;
}

double Episode::totalReward() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.reward;
    return s;
}

double stepReward(double lossBefore, double lossAfter, bool isNewSample, double mu) {
    return (lossBefore - lossAfter) - (isNewSample ? mu : 0.0);
}

std::vector<double> discountedReturns(std::span<const double> rewards, double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, "discountedReturns: lambda must lie in [0, 1]");
    std::vector<double> v(rewards.size());
    double acc = 0.0;
    for (std::size_t k = rewards.size(); k-- > 0;) {
        acc = rewards[k] + lambda * acc;
        v[k] = acc;
    }
    return v;
}

Episode rolloutWithRho(const FieldTask& task, const RhoFunction& rhoOf, const LearnerConfig& learner,
                       const RewardConfig& reward, std::size_t horizon, RandomStream& rng) {
    learner.validate();
    reward.validate();
    require(horizon >= 1, "rollout: horizon must be >= 1");
    const auto n = static_cast<std::size_t>(task.sensorCount());
    const auto uniform = uniformLaw(n);

    Episode ep;
    ep.steps.reserve(horizon);
    ModelState state = ModelState::zeros(task.kernelCount());
    Eigen::VectorXd resid = residuals(task, state.weights);
    double loss = resid.squaredNorm() / static_cast<double>(n);
    ep.initialLoss = loss;
    ObservedSet observed(n);
    PolicyFeatures feats{};

    for (std::size_t t = 1; t <= horizon; ++t) {
        auto observedLaw = importanceLawOrFallback(resid, observed, task);
        const double rho = rhoOf(feats);
        require(rho >= 0.0 && rho <= 1.0, "rollout: mixing weight outside [0, 1]");
        const auto law = mixLaws(uniform, observedLaw, rho);
        const std::size_t action = drawAction(law, rng);
        const double prob = law[action];

        const ObservedSet before = observed;
        const double lossPrevOnPrev = before.empty() ? 0.0 : averageLoss(resid, before.indices());
        const bool isNew = observed.insert(action);

        const auto a = static_cast<Eigen::Index>(action);
        state = proximalStep(state, task, action, prob, learner, resid[a]);
        resid = residuals(task, state.weights);
        const double lossAfter = resid.squaredNorm() / static_cast<double>(n);

        const double actionProb = actionProbability(rho, action, observedLaw, n);
        ep.steps.push_back(EpisodeStep{
            .features = feats,
            .action = action,
            .wasNewSample = isNew,
            .reward = stepReward(loss, lossAfter, isNew, reward.mu),
            .rho = rho,
            .actionProb = actionProb,
            .logProb = std::log(actionProb),
            .lossAfter = lossAfter,
            .observedAfter = observed.size(),
            .observedLaw = std::move(observedLaw),
        });

        const double lossCurOnPrev = before.empty() ? 0.0 : averageLoss(resid, before.indices());
        feats = extractFeatures(action, before, observed, lossPrevOnPrev, lossCurOnPrev,
                                averageLoss(resid, observed.indices()));
        loss = lossAfter;
    }
    ep.finalModel = std::move(state);
    ep.observedFinal = std::move(observed);
    return ep;
}

Episode rolloutEpisode(const FieldTask& task, const PolicyParams& params, const LearnerConfig& learner,
                       const RewardConfig& reward, std::size_t horizon, RandomStream& rng) {
    params.validate();
    return rolloutWithRho(task, [&](const PolicyFeatures& f) { return forwardRho(params, f); }, learner, reward,
                          horizon, rng);
}

PolicyParams policyGradient(const PolicyParams& params, const Episode& episode, const RewardConfig& reward) {
    const auto rewards = episode.rewards();
    auto returns = discountedReturns(rewards, reward.lambda);
    if (reward.meanBaseline && !returns.empty()) {
        const double b = std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
        for (auto& v : returns) v -= b;
    }
    auto grad = PolicyParams::zeros(params.hidden());
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
        if (returns[t] == 0.0) continue;
        const auto& s = episode.steps[t];
        grad += returns[t] * logProbGradient(params, s.features, s.action, s.observedLaw, s.observedLaw.size());
    }
    return grad;
}

ReinforceResult reinforceUpdate(const PolicyParams& params, const Episode& episode, const RewardConfig& reward) {
    auto delta = reward.alpha * policyGradient(params, episode, reward);
    ReinforceResult out;
    out.updateNorm = delta.flatten().norm();
    if (out.updateNorm > reward.clipNorm) {
        delta *= reward.clipNorm / out.updateNorm;
        out.clipped = true;
    }
    out.params = params + delta;
    return out;
}

PolicyParams initialPolicy(const MetaTrainConfig& config, std::uint64_t seed, std::size_t candidate) {
    auto rng = RandomStream::derived(seed, {kInit, candidate});
    return PolicyParams::random(config.hidden, rng, config.initScale);
}

double evaluatePolicy(const PolicyParams& params, std::span<const FieldTask> tasks,
                      std::span<const std::size_t> taskIds, const MetaTrainConfig& config, std::uint64_t seed) {
    require(!taskIds.empty(), "evaluatePolicy: no evaluation tasks");
    double total = 0.0;
    for (auto id : taskIds) {
        require(id < tasks.size(), "evaluatePolicy: task index out of range");
        for (std::size_t s = 0; s < config.evalSeeds; ++s) {
            auto rng = RandomStream::derived(seed, {kEval, id, s});
            total += rolloutEpisode(tasks[id], params, config.learner, config.reward, config.horizon, rng).totalReward();
        }
    }
    return total / static_cast<double>(taskIds.size() * config.evalSeeds);
}

MetaTrainResult metaTrain(std::span<const FieldTask> tasks, const MetaTrainConfig& config, std::uint64_t seed) {
    config.validate();
    if (tasks.size() < 2) throw InvalidConfig("metaTrain: need at least two tasks (train and held-out)");

    const std::size_t held = std::min(config.evalTasks, tasks.size() - 1);
    std::size_t candidates = tasks.size() - held;
    if (config.maxCandidates > 0) candidates = std::min(candidates, config.maxCandidates);

    MetaTrainResult result;
    for (std::size_t k = tasks.size() - held; k < tasks.size(); ++k) result.evalTaskIds.push_back(k);

    if (config.episodesPerTask == 0) {
        result.policy = initialPolicy(config, seed, 0);
        result.selected = 0;
        return result;
    }

    struct CandidateOutcome {
        PolicyParams params;
        double score = 0.0;
        std::vector<EpisodeRecord> log;
    };
    std::vector<CandidateOutcome> outcomes(candidates);

    parallelFor(candidates, config.workers, [&](std::size_t c) {
        auto& out = outcomes[c];
        out.params = initialPolicy(config, seed, c);
        for (std::size_t l = 0; l < config.episodesPerTask; ++l) {
            auto rng = RandomStream::derived(seed, {kTrain, c, l});
            const auto ep = rolloutEpisode(tasks[c], out.params, config.learner, config.reward, config.horizon, rng);
            auto upd = reinforceUpdate(out.params, ep, config.reward);
            out.log.push_back({c, c, l, ep.totalReward(), ep.observedFinal.size(), ep.initialLoss, ep.finalLoss(),
                               upd.clipped});
            out.params = std::move(upd.params);
        }
        out.score = evaluatePolicy(out.params, tasks, result.evalTaskIds, config, seed);
    });

    result.candidateScores.reserve(candidates);
    std::size_t best = 0;
    for (std::size_t c = 0; c < candidates; ++c) {
        result.candidateScores.push_back(outcomes[c].score);
        if (outcomes[c].score > outcomes[best].score) best = c;
        result.log.insert(result.log.end(), outcomes[c].log.begin(), outcomes[c].log.end());
    }
    result.selected = best;
    result.policy = outcomes[best].params;
    return result;
}

} // namespace adaptsense
