#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptsense/field.hpp"
#include "adaptsense/harness.hpp"
#include "adaptsense/learner.hpp"
#include "adaptsense/meta.hpp"

namespace adaptsense {

/// Every tunable of the pipeline. Defaults follow the published experiment
/// where it states a value (K = 50, beta = 0.4, n = 500, sigma = 0.1,
/// gamma = 0.08, eta_t = 1/(2t), L = 10, 200 training tasks) and the
/// documented choices otherwise.
struct RunConfig {
    TaskConfig task{};
    std::vector<Eigen::Index> kappas{4, 8, 12, 20};
    std::vector<double> betas{0.4};

    LearnerConfig learner{.gamma = 0.08, .stepScale = 0.5, .importanceWeighting = false};
    RewardConfig reward{};
    Eigen::Index hidden = 8;
    double initScale = 0.1;

    std::size_t horizon = 500;          // T
    std::size_t episodesPerTask = 10;   // L
    std::size_t trainTasks = 200;
    std::size_t evalTasks = 20;
    std::size_t evalSeeds = 1;
    std::size_t maxCandidates = 0;
    std::size_t testTasks = 50;         // per (kappa, beta) cell
    std::size_t seedsPerTask = 20;
    std::vector<std::string> strategies{"uniform", "oracle", "meta"};

    std::uint64_t seed = 1;
    std::size_t workers = 0;            // 0: defaultWorkerCount(); not part of the hash

    void validate() const;

    TaskConfig taskConfig(Eigen::Index kappa, double beta) const;
    MetaTrainConfig metaTrainConfig() const;
    HarnessConfig harnessConfig() const;
    std::vector<std::uint64_t> evaluationSeeds() const;
    std::size_t resolvedWorkers() const;
};

nlohmann::json toJson(const RunConfig& c);

/// Reads a config, starting from defaults; unknown keys are rejected.
RunConfig runConfigFromJson(const nlohmann::json& j);

/// Applies `patch` (RFC 7386 merge patch) over `base` and validates.
RunConfig mergeConfig(const RunConfig& base, const nlohmann::json& patch);

/// 16 hex digits of FNV-1a over the canonical JSON of the config (workers
/// excluded, since they do not change any output).
std::string configHash(const RunConfig& c);

} // namespace adaptsense
