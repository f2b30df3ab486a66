#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "adaptsense/field.hpp"
#include "adaptsense/learner.hpp"
#include "adaptsense/policy.hpp"
#include "adaptsense/sampling.hpp"

namespace adaptsense {

struct RewardConfig {
    double mu = 0.01;       // price per first-time sensor read
    double lambda = 0.99;   // discount
    double alpha = 0.01;    // policy learning rate
    bool meanBaseline = false;
    double clipNorm = 10.0; // l2 cap on one policy update

    void validate() const;
};

struct EpisodeStep {
    PolicyFeatures features;
    std::size_t action = 0;
    bool wasNewSample = false;
    double reward = 0.0;
    double rho = 0.0;
    double actionProb = 0.0;  // mixture probability of `action`
    double logProb = 0.0;
    double lossAfter = 0.0;   // L(w_t) over all sensors
    std::size_t observedAfter = 0;
    SamplingDistribution observedLaw;  // importance law the mixture used
};

/// One T-step trajectory of the sense / update / reward loop.
struct Episode {
    std::vector<EpisodeStep> steps;
    double initialLoss = 0.0;
    ModelState finalModel;
    ObservedSet observedFinal;

    std::vector<double> rewards() const;
    double totalReward() const;
    double finalLoss() const { return steps.empty() ? initialLoss : steps.back().lossAfter; }
};

/// (lossBefore - lossAfter) - mu * [isNewSample]
double stepReward(double lossBefore, double lossAfter, bool isNewSample, double mu);

/// v_t = r_t + lambda v_{t+1}, computed backwards.
std::vector<double> discountedReturns(std::span<const double> rewards, double lambda);

/// Maps the current features to the mixing weight rho in [0, 1].
using RhoFunction = std::function<double(const PolicyFeatures&)>;

/// Runs the two-layer loop for `horizon` steps with the mixing weight from
/// `rho`. Each step mixes uniform with the observed importance law, draws a
/// sensor, pays mu if it is new, takes one proximal step with the drawn
/// sensor's mixture probability and rewards the full-dataset loss drop.
/// Features for step t are computed after the update of step t - 1.
Episode rolloutWithRho(const FieldTask& task, const RhoFunction& rho, const LearnerConfig& learner,
                       const RewardConfig& reward, std::size_t horizon, RandomStream& rng);

Episode rolloutEpisode(const FieldTask& task, const PolicyParams& params, const LearnerConfig& learner,
                       const RewardConfig& reward, std::size_t horizon, RandomStream& rng);

/// Sum over steps of v_t * grad log pi(a_t | o_t), at `params`.
PolicyParams policyGradient(const PolicyParams& params, const Episode& episode, const RewardConfig& reward);

struct ReinforceResult {
    PolicyParams params;
    double updateNorm = 0.0;  // before clipping
    bool clipped = false;
};

/// params + alpha * policyGradient, with the step capped at clipNorm.
ReinforceResult reinforceUpdate(const PolicyParams& params, const Episode& episode, const RewardConfig& reward);

struct MetaTrainConfig {
    LearnerConfig learner{};
    RewardConfig reward{};
    Eigen::Index hidden = 8;
    double initScale = 0.1;
    std::size_t horizon = 500;
    std::size_t episodesPerTask = 10;  // L
    std::size_t evalTasks = 20;        // held-out tasks shared by every candidate
    std::size_t evalSeeds = 1;         // rollouts per held-out task
    std::size_t maxCandidates = 0;     // 0: every task not held out
    std::size_t workers = 1;

    void validate() const;
};

struct EpisodeRecord {
    std::size_t candidate = 0;
    std::size_t task = 0;
    std::size_t episode = 0;
    double episodeReturn = 0.0;
    std::size_t observed = 0;
    double initialLoss = 0.0;
    double finalLoss = 0.0;
    bool clipped = false;
};

struct MetaTrainResult {
    PolicyParams policy;
    std::size_t selected = 0;              // candidate (= task) index
    std::vector<double> candidateScores;   // mean held-out return per candidate
    std::vector<std::size_t> evalTaskIds;
    std::vector<EpisodeRecord> log;
};

/// Fresh policy of a candidate, as metaTrain initializes it.
PolicyParams initialPolicy(const MetaTrainConfig& config, std::uint64_t seed, std::size_t candidate);

/// Mean undiscounted return of a frozen policy over `taskIds`, `evalSeeds`
/// rollouts each. Rollout seeds depend only on (seed, task, repetition).
double evaluatePolicy(const PolicyParams& params, std::span<const FieldTask> tasks,
                      std::span<const std::size_t> taskIds, const MetaTrainConfig& config, std::uint64_t seed);

/// Multi-task meta-training. The last min(evalTasks, N - 1) tasks form the
/// held-out set; every other task (up to maxCandidates) trains one candidate
/// from its own seeded init for L episodes. The candidate with the highest
/// held-out mean return wins, ties to the lowest index. L = 0 skips
/// evaluation and returns the first candidate's init.
MetaTrainResult metaTrain(std::span<const FieldTask> tasks, const MetaTrainConfig& config, std::uint64_t seed);

} // namespace adaptsense
