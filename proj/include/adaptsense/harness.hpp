#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adaptsense/field.hpp"
#include "adaptsense/learner.hpp"
#include "adaptsense/meta.hpp"
#include "adaptsense/policy.hpp"

namespace adaptsense {

struct UniformStrategy {};

/// Importance law over every sensor. It needs all n readings to form the
/// law, so all n sensors are charged as communicated from the first step.
struct OracleImportanceStrategy {};

struct FixedMixtureStrategy {
    double rho = 0.5;
};

struct MetaPolicyStrategy {
    PolicyParams params;
};

using Strategy = std::variant<UniformStrategy, OracleImportanceStrategy, FixedMixtureStrategy, MetaPolicyStrategy>;

/// "uniform", "oracle", "mixture:<rho>", "meta".
std::string strategyName(const Strategy& s);

/// Inverse of strategyName; "meta" needs `policy`. Throws InvalidConfig.
Strategy parseStrategy(std::string_view text, const std::optional<PolicyParams>& policy = std::nullopt);

/// Per-step curves averaged over seeds. The *Squares vectors hold the mean of
/// squared values so results over disjoint seed sets can be merged exactly.
struct RunMetrics {
    std::vector<double> mseCurve;     // L(w_t), t = 1..T
    std::vector<double> commCurve;    // |O_t|
    std::vector<double> mseSquares;
    std::vector<double> commSquares;
    double finalObjective = 0.0;      // L(w_T) + gamma ||w_T||_1
    double upsilon = 0.0;
    std::size_t seeds = 0;

    double finalMse() const { return mseCurve.back(); }
    double finalComm() const { return commCurve.back(); }
    /// Standard error of the mean of the per-step value.
    double mseStderr(std::size_t step) const;
    double commStderr(std::size_t step) const;
};

/// Seed-weighted average of two results over the same horizon.
RunMetrics combine(const RunMetrics& a, const RunMetrics& b);

struct HarnessConfig {
    LearnerConfig learner{};
    RewardConfig reward{};  // only mu matters here, for the recorded returns
    std::size_t horizon = 300;
    std::size_t workers = 1;
};

/// Frozen-strategy rollouts on one task, one per seed, averaged pointwise.
RunMetrics runStrategy(const FieldTask& task, const Strategy& strategy, std::span<const std::uint64_t> seeds,
                       const HarnessConfig& config);

/// One episode of a frozen strategy; OracleImportance is not episode-shaped
/// and is rejected.
Episode strategyEpisode(const FieldTask& task, const Strategy& strategy, std::uint64_t seed,
                        const HarnessConfig& config);

struct GroupKey {
    Eigen::Index kappa = 0;
    double beta = 0.0;
    auto operator<=>(const GroupKey&) const = default;
};

struct GroupResult {
    GroupKey key;
    std::size_t tasks = 0;
    std::vector<RunMetrics> perStrategy;  // aligned with ComparisonTable::strategies
};

struct SummaryRow {
    GroupKey key;
    std::string strategy;
    std::size_t tasks = 0;
    double finalMse = 0.0;
    double finalMseStderr = 0.0;
    double finalComm = 0.0;
    double finalObjective = 0.0;
    /// (reference final MSE - this final MSE) / reference final MSE. The
    /// reference is "uniform" when present, else the first strategy.
    double margin = 0.0;
};

struct TaskRow {
    std::size_t task = 0;
    GroupKey key;
    double upsilon = 0.0;
    double predictedRatio = 0.0;  // n^2 max|y|^2 / (sum|y|)^2
    std::vector<double> finalMse;  // per strategy
    /// (uniform - oracle) / uniform final MSE when both strategies ran.
    std::optional<double> importanceMargin;
};

struct ComparisonTable {
    std::vector<std::string> strategies;
    std::size_t referenceStrategy = 0;
    std::vector<GroupResult> groups;  // sorted by (kappa, beta)
    std::vector<SummaryRow> summary;
    std::vector<TaskRow> tasks;
    /// Spearman of importance margin vs predicted ratio, over tasks and over
    /// (kappa, beta) group means. Empty when undefined.
    std::optional<double> marginRatioCorrelationTasks;
    std::optional<double> marginRatioCorrelationGroups;
};

ComparisonTable compareStrategies(std::span<const FieldTask> corpus, std::span<const Strategy> strategies,
                                  std::span<const std::uint64_t> seeds, const HarnessConfig& config);

/// Rank correlation between first-read order and slope steepness of the
/// sensors an episode read. Both rankings put rank 1 first: earliest read and
/// steepest |df/dx|. +1 means steep sensors were read first. Throws
/// UndefinedQuantity with fewer than two reads or constant slopes.
double slopeOrderingDiagnostic(const Episode& episode, const FieldTask& task);

} // namespace adaptsense
