#include "adaptsense/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "adaptsense/parallel.hpp"
#include "adaptsense/stats.hpp"

namespace adaptsense {

namespace {

enum Stream : std::uint64_t { kRun = 21 };

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

double stderrOf(double meanValue, double meanSquare, std::size_t count) {
    if (count < 2) return 0.0;
    const double c = static_cast<double>(count);
    const double var = std::max(0.0, meanSquare - meanValue * meanValue) * c / (c - 1.0);
    return std::sqrt(var / c);
}

struct Trace {
    std::vector<double> mse;
    std::vector<double> comm;
    double objective = 0.0;
};

Trace oracleTrace(const FieldTask& task, const HarnessConfig& config, RandomStream& rng) {
    const auto n = static_cast<std::size_t>(task.sensorCount());
    const auto uniform = uniformLaw(n);
    Trace tr;
    ModelState state = ModelState::zeros(task.kernelCount());
    Eigen::VectorXd resid = residuals(task, state.weights);
    for (std::size_t t = 1; t <= config.horizon; ++t) {
        auto law = oracleImportanceLaw(state, task).value_or(uniform);
        const auto a = drawAction(law, rng);
        state = proximalStep(state, task, a, law[a], config.learner, resid[static_cast<Eigen::Index>(a)]);
        resid = residuals(task, state.weights);
        tr.mse.push_back(resid.squaredNorm() / static_cast<double>(n));
        tr.comm.push_back(static_cast<double>(n));
    }
    tr.objective = tr.mse.back() + config.learner.gamma * state.weights.lpNorm<1>();
    return tr;
}

RhoFunction rhoFor(const Strategy& s) {
    return std::visit(Overloaded{
                          [](const UniformStrategy&) -> RhoFunction { return [](const PolicyFeatures&) { return 1.0; }; },
                          [](const FixedMixtureStrategy& m) -> RhoFunction {
                              return [rho = m.rho](const PolicyFeatures&) { return rho; };
                          },
                          [](const MetaPolicyStrategy& m) -> RhoFunction {
                              return [&params = m.params](const PolicyFeatures& f) { return forwardRho(params, f); };
                          },
                          [](const OracleImportanceStrategy&) -> RhoFunction {
                              throw ContractViolation("oracle importance sampling has no mixing weight");
                          },
                      },
                      s);
}

} // namespace

std::string strategyName(const Strategy& s) {
    return std::visit(Overloaded{
                          [](const UniformStrategy&) -> std::string { return "uniform"; },
                          [](const OracleImportanceStrategy&) -> std::string { return "oracle"; },
                          [](const FixedMixtureStrategy& m) -> std::string {
                              std::ostringstream os;
                              os << "mixture:" << m.rho;
                              return os.str();
                          },
                          [](const MetaPolicyStrategy&) -> std::string { return "meta"; },
                      },
                      s);
}

Strategy parseStrategy(std::string_view text, const std::optional<PolicyParams>& policy) {
    if (text == "uniform") return UniformStrategy{};
    if (text == "oracle") return OracleImportanceStrategy{};
    if (text == "meta") {
        if (!policy) throw InvalidConfig("strategy 'meta' needs a policy checkpoint");
        return MetaPolicyStrategy{*policy};
    }
    constexpr std::string_view prefix = "mixture:";
    if (text.starts_with(prefix)) {
        const std::string copy(text.substr(prefix.size()));
        char* end = nullptr;
        const double rho = std::strtod(copy.c_str(), &end);
        if (copy.empty() || end != copy.c_str() + copy.size())
            throw InvalidConfig("malformed mixture weight in strategy '" + std::string(text) + "'");
        if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidConfig("mixture weight must lie in [0, 1]");
        return FixedMixtureStrategy{rho};
    }
    throw InvalidConfig("unknown strategy '" + std::string(text) + "'");
}

double RunMetrics::mseStderr(std::size_t step) const { return stderrOf(mseCurve[step], mseSquares[step], seeds); }
double RunMetrics::commStderr(std::size_t step) const { return stderrOf(commCurve[step], commSquares[step], seeds); }

RunMetrics combine(const RunMetrics& a, const RunMetrics& b) {
    if (a.seeds == 0) return b;
    if (b.seeds == 0) return a;
    require(a.mseCurve.size() == b.mseCurve.size(), "combine: horizons differ");
    const double wa = static_cast<double>(a.seeds) / static_cast<double>(a.seeds + b.seeds);
    const double wb = 1.0 - wa;
    auto mix = [&](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = wa * x[k] + wb * y[k];
        return out;
    };
    RunMetrics m;
    m.mseCurve = mix(a.mseCurve, b.mseCurve);
    m.commCurve = mix(a.commCurve, b.commCurve);
    m.mseSquares = mix(a.mseSquares, b.mseSquares);
    m.commSquares = mix(a.commSquares, b.commSquares);
    m.finalObjective = wa * a.finalObjective + wb * b.finalObjective;
    m.upsilon = wa * a.upsilon + wb * b.upsilon;
    m.seeds = a.seeds + b.seeds;
    return m;
}

Episode strategyEpisode(const FieldTask& task, const Strategy& strategy, std::uint64_t seed,
                        const HarnessConfig& config) {
    auto rng = RandomStream::derived(task.seed(), {kRun, seed});
    return rolloutWithRho(task, rhoFor(strategy), config.learner, config.reward, config.horizon, rng);
}

RunMetrics runStrategy(const FieldTask& task, const Strategy& strategy, std::span<const std::uint64_t> seeds,
                       const HarnessConfig& config) {
    require(!seeds.empty(), "runStrategy: no seeds");
    require(config.horizon >= 1, "runStrategy: horizon must be >= 1");
    const std::size_t T = config.horizon;
    RunMetrics m;
    m.mseCurve.assign(T, 0.0);
    m.commCurve.assign(T, 0.0);
    m.mseSquares.assign(T, 0.0);
    m.commSquares.assign(T, 0.0);
    m.seeds = seeds.size();
    m.upsilon = upsilonNorm(task);

    const bool oracle = std::holds_alternative<OracleImportanceStrategy>(strategy);
    const RhoFunction rho = oracle ? RhoFunction{} : rhoFor(strategy);
    const double w = 1.0 / static_cast<double>(seeds.size());
    for (auto seed : seeds) {
        auto rng = RandomStream::derived(task.seed(), {kRun, seed});
        Trace tr;
        if (oracle) {
            tr = oracleTrace(task, config, rng);
        } else {
            const auto ep = rolloutWithRho(task, rho, config.learner, config.reward, T, rng);
            for (const auto& s : ep.steps) {
                tr.mse.push_back(s.lossAfter);
                tr.comm.push_back(static_cast<double>(s.observedAfter));
            }
            tr.objective = ep.finalLoss() + config.learner.gamma * ep.finalModel.weights.lpNorm<1>();
        }
        for (std::size_t k = 0; k < T; ++k) {
            m.mseCurve[k] += w * tr.mse[k];
            m.mseSquares[k] += w * tr.mse[k] * tr.mse[k];
            m.commCurve[k] += w * tr.comm[k];
            m.commSquares[k] += w * tr.comm[k] * tr.comm[k];
        }
        m.finalObjective += w * tr.objective;
    }
    return m;
}

ComparisonTable compareStrategies(std::span<const FieldTask> corpus, std::span<const Strategy> strategies,
                                  std::span<const std::uint64_t> seeds, const HarnessConfig& config) {
    require(!corpus.empty(), "compareStrategies: empty corpus");
    require(!strategies.empty(), "compareStrategies: no strategies");

    ComparisonTable table;
    std::optional<std::size_t> uniformIdx, oracleIdx;
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        table.strategies.push_back(strategyName(strategies[s]));
        if (!uniformIdx && std::holds_alternative<UniformStrategy>(strategies[s])) uniformIdx = s;
        if (!oracleIdx && std::holds_alternative<OracleImportanceStrategy>(strategies[s])) oracleIdx = s;
    }
    table.referenceStrategy = uniformIdx.value_or(0);

    const std::size_t S = strategies.size();
    std::vector<RunMetrics> cells(corpus.size() * S);
    parallelFor(cells.size(), config.workers, [&](std::size_t k) {
        cells[k] = runStrategy(corpus[k / S], strategies[k % S], seeds, config);
    });

    std::map<GroupKey, GroupResult> groups;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& task = corpus[i];
        const GroupKey key{task.config().sparsity, task.config().width};
        auto& g = groups[key];
        g.key = key;
        g.perStrategy.resize(S);
        ++g.tasks;
        TaskRow row;
        row.task = i;
        row.key = key;
        row.upsilon = upsilonNorm(task);
        row.predictedRatio = predictedGainRatio(task);
        for (std::size_t s = 0; s < S; ++s) {
            const auto& c = cells[i * S + s];
            g.perStrategy[s] = combine(g.perStrategy[s], c);
            row.finalMse.push_back(c.finalMse());
        }
        if (uniformIdx && oracleIdx) {
            const double u = row.finalMse[*uniformIdx];
            if (u > 0.0) row.importanceMargin = (u - row.finalMse[*oracleIdx]) / u;
        }
        table.tasks.push_back(std::move(row));
    }

    for (auto& [key, g] : groups) {
        const auto& ref = g.perStrategy[table.referenceStrategy];
        for (std::size_t s = 0; s < S; ++s) {
            const auto& m = g.perStrategy[s];
            SummaryRow r;
            r.key = key;
            r.strategy = table.strategies[s];
            r.tasks = g.tasks;
            r.finalMse = m.finalMse();
            r.finalMseStderr = m.mseStderr(m.mseCurve.size() - 1);
            r.finalComm = m.finalComm();
            r.finalObjective = m.finalObjective;
            r.margin = ref.finalMse() > 0.0 ? (ref.finalMse() - m.finalMse()) / ref.finalMse() : 0.0;
            table.summary.push_back(std::move(r));
        }
        table.groups.push_back(std::move(g));
    }

    if (uniformIdx && oracleIdx) {
        std::vector<double> margins, ratios;
        std::map<GroupKey, std::pair<std::vector<double>, std::vector<double>>> byGroup;
        for (const auto& row : table.tasks) {
            if (!row.importanceMargin) continue;
            margins.push_back(*row.importanceMargin);
            ratios.push_back(row.predictedRatio);
            byGroup[row.key].first.push_back(*row.importanceMargin);
            byGroup[row.key].second.push_back(row.predictedRatio);
        }
        try {
            table.marginRatioCorrelationTasks = spearman(margins, ratios);
        } catch (const UndefinedQuantity&) {
        }
        std::vector<double> gm, gr;
        for (const auto& [key, v] : byGroup) {
            gm.push_back(mean(v.first));
            gr.push_back(mean(v.second));
        }
        try {
            table.marginRatioCorrelationGroups = spearman(gm, gr);
        } catch (const UndefinedQuantity&) {
        }
    }
    return table;
}

double slopeOrderingDiagnostic(const Episode& episode, const FieldTask& task) {
    const auto order = episode.observedFinal.indices();
    if (order.size() < 2) throw UndefinedQuantity("slope diagnostic: fewer than two sensors were read");
    const Eigen::VectorXd slopes = trueSlopeMagnitudes(task);
    std::vector<double> readRank(order.size()), negSlope(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        readRank[k] = static_cast<double>(k + 1);
        negSlope[k] = -slopes[static_cast<Eigen::Index>(order[k])];
    }
    // Ranking -slope ascending puts the steepest sensor at rank 1.
    return spearman(readRank, averageRanks(negSlope));
}

} // namespace adaptsense
