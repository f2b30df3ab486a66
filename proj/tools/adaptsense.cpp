// adaptsense: generate task corpora, meta-train a sampling policy, evaluate
// sampling strategies and run the field-level diagnostics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptsense/config.hpp"
#include "adaptsense/errors.hpp"
#include "adaptsense/field.hpp"
#include "adaptsense/harness.hpp"
#include "adaptsense/io.hpp"
#include "adaptsense/meta.hpp"
#include "adaptsense/rng.hpp"
#include "adaptsense/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace adaptsense;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kIo = 3, kContract = 4 };

constexpr const char* kVersion = "1.0.0";
constexpr std::uint64_t kTrainCorpusStream = 41;
constexpr std::uint64_t kTestCorpusStream = 42;
constexpr std::uint64_t kDiagnoseStream = 43;

struct ConfigOptions {
    std::string file;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> horizon;
    std::optional<Eigen::Index> sensors;
    std::optional<double> mu;
    std::vector<Eigen::Index> kappas;
    std::vector<double> betas;
    bool fullScale = false;
};

void addConfigOptions(CLI::App* app, ConfigOptions& o) {
    app->add_option("-c,--config", o.file, "JSON config file (defaults apply to absent keys)");
    app->add_option("--set", o.sets, "Override a config value, e.g. --set reward.mu=0.001 (repeatable)");
    app->add_option("--seed", o.seed, "Root seed");
    app->add_option("--workers", o.workers, "Worker threads (0: ADAPTSENSE_WORKERS or all cores)");
    app->add_option("-T,--horizon", o.horizon, "Steps per episode");
    app->add_option("-n,--sensors", o.sensors, "Sensors per task");
    app->add_option("--mu", o.mu, "Communication cost per newly read sensor");
    app->add_option("--kappas", o.kappas, "Sparsity levels of the sweep");
    app->add_option("--betas", o.betas, "Kernel widths of the sweep");
    app->add_flag("--full-scale", o.fullScale, "Published test scale: 500 test tasks per cell");
}

json parseSetValue(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return text;
    }
}

RunConfig resolveConfig(const ConfigOptions& o) {
    json patch = json::object();
    if (!o.file.empty()) patch = readJsonFile(o.file);
    RunConfig c = runConfigFromJson(patch);

    json flags = json::object();
    if (o.fullScale) flags["evaluation"]["testTasks"] = 500;
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        requireConfig(eq != std::string::npos && eq > 0, "--set expects key.path=value, got '" + s + "'");
        json::json_pointer ptr;
        std::string path = s.substr(0, eq);
        std::size_t start = 0;
        while (true) {
            const auto dot = path.find('.', start);
            ptr /= path.substr(start, dot - start);
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        flags[ptr] = parseSetValue(s.substr(eq + 1));
    }
    if (o.seed) flags["seed"] = *o.seed;
    if (o.workers) flags["workers"] = *o.workers;
    if (o.horizon) flags["training"]["horizon"] = *o.horizon;
    if (o.sensors) flags["field"]["n"] = *o.sensors;
    if (o.mu) flags["reward"]["mu"] = *o.mu;
    if (!o.kappas.empty()) flags["sweep"]["kappas"] = o.kappas;
    if (!o.betas.empty()) flags["sweep"]["betas"] = o.betas;
    return mergeConfig(c, flags);
}

json manifest(const RunConfig& c, const std::string& command, json extra) {
    json m{{"tool", "adaptsense"},
           {"version", kVersion},
           {"command", command},
           {"configHash", configHash(c)},
           {"config", toJson(c)}};
    m["config"].erase("workers");
    for (auto& [k, v] : extra.items()) m[k] = v;
    return m;
}

std::string cellTag(Eigen::Index kappa, double beta) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "k%02ld_b%s", static_cast<long>(kappa), formatDouble(beta).c_str());
    return buf;
}

// ---- generate-tasks --------------------------------------------------------

struct GenerateOptions {
    ConfigOptions config;
    std::string out;
    std::string split = "test";
    std::optional<std::size_t> count;
};

int cmdGenerate(const GenerateOptions& o) {
    const RunConfig c = resolveConfig(o.config);
    const bool train = o.split == "train";
    const std::size_t count = o.count.value_or(train ? c.trainTasks : c.testTasks);
    requireConfig(count >= 1, "generate-tasks: count must be >= 1");
    const std::uint64_t stream = train ? kTrainCorpusStream : kTestCorpusStream;

    json files = json::array();
    for (std::size_t ki = 0; ki < c.kappas.size(); ++ki) {
        for (std::size_t bi = 0; bi < c.betas.size(); ++bi) {
            const auto tc = c.taskConfig(c.kappas[ki], c.betas[bi]);
            for (std::size_t i = 0; i < count; ++i) {
                const auto seed = deriveSeed(c.seed, {stream, ki, bi, i});
                const auto task = generateTask(tc, seed);
                char name[96];
                std::snprintf(name, sizeof name, "task_%s_%05zu.json", cellTag(tc.sparsity, tc.width).c_str(), i);
                auto j = taskToJson(task);
                j["configHash"] = configHash(c);
                writeJsonFile(fs::path(o.out) / name, j);
                files.push_back(name);
            }
        }
    }
    writeJsonFile(fs::path(o.out) / "manifest.json",
                  manifest(c, "generate-tasks", {{"split", o.split}, {"countPerCell", count}, {"files", files}}));
    std::cout << "wrote " << files.size() << " tasks to " << o.out << "\n";
    return kOk;
}

// ---- meta-train -------------------------------------------------------------

struct MetaTrainOptions {
    ConfigOptions config;
    std::string corpus;
    std::string out;
    std::string log;
};

int cmdMetaTrain(const MetaTrainOptions& o) {
    const RunConfig c = resolveConfig(o.config);
    const auto tasks = loadCorpus(o.corpus);
    requireConfig(tasks.size() >= 2, "meta-train: corpus needs at least two tasks");
    const auto result = metaTrain(tasks, c.metaTrainConfig(), c.seed);

    auto ck = policyToJson(result.policy);
    ck["configHash"] = configHash(c);
    ck["selectedCandidate"] = result.selected;
    ck["candidateScores"] = result.candidateScores;
    ck["evalTasks"] = result.evalTaskIds;
    writeJsonFile(o.out, ck);

    const std::string logPath = o.log.empty() ? o.out + ".log.jsonl" : o.log;
    std::string text = json{{"configHash", configHash(c)}}.dump() + "\n";
    for (const auto& r : result.log) text += episodeRecordToJson(r).dump() + "\n";
    writeTextFile(logPath, text);
    writeJsonFile(o.out + ".manifest.json",
                  manifest(c, "meta-train", {{"corpus", o.corpus}, {"tasks", tasks.size()}, {"log", logPath}}));
    std::cout << "selected candidate " << result.selected << " of " << result.candidateScores.size()
              << "; checkpoint " << o.out << "\n";
    return kOk;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateOptions {
    ConfigOptions config;
    std::string corpus;
    std::string checkpoint;
    std::vector<std::string> strategies;
    std::string out;
};

std::optional<PolicyParams> loadPolicy(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return policyFromJson(readJsonFile(path));
}

int cmdEvaluate(const EvaluateOptions& o) {
    RunConfig c = resolveConfig(o.config);
    if (!o.strategies.empty()) {
        c.strategies = o.strategies;
        c.validate();
    }
    const auto policy = loadPolicy(o.checkpoint);
    std::vector<Strategy> strategies;
    for (const auto& s : c.strategies) {
        if (s == "meta" && !policy) throw InvalidConfig("evaluate: strategy 'meta' needs --checkpoint");
        strategies.push_back(parseStrategy(s, policy));
    }
    const auto corpus = loadCorpus(o.corpus);
    const auto seeds = c.evaluationSeeds();
    const auto table = compareStrategies(corpus, strategies, seeds, c.harnessConfig());
    const auto hash = configHash(c);

    const fs::path dir(o.out);
    writeTextFile(dir / "mse.csv", curvesCsv(table, "mse", hash));
    writeTextFile(dir / "comm.csv", curvesCsv(table, "comm", hash));
    writeTextFile(dir / "summary.csv", summaryCsv(table, hash));
    writeTextFile(dir / "tasks.csv", taskCsv(table, hash));
    json corr = json::object();
    if (table.marginRatioCorrelationTasks) corr["tasks"] = *table.marginRatioCorrelationTasks;
    if (table.marginRatioCorrelationGroups) corr["groups"] = *table.marginRatioCorrelationGroups;
    writeJsonFile(dir / "manifest.json",
                  manifest(c, "evaluate",
                           {{"corpus", o.corpus},
                            {"checkpoint", o.checkpoint},
                            {"tasks", corpus.size()},
                            {"seeds", seeds},
                            {"marginRatioSpearman", corr},
                            {"outputs", {"mse.csv", "comm.csv", "summary.csv", "tasks.csv"}}}));

    for (const auto& r : table.summary)
        std::printf("kappa=%-3ld beta=%-5s %-14s final_mse=%.5f comm=%.1f margin=%+.3f\n",
                    static_cast<long>(r.key.kappa), formatDouble(r.key.beta).c_str(), r.strategy.c_str(),
                    r.finalMse, r.finalComm, r.margin);
    return kOk;
}

// ---- diagnose ---------------------------------------------------------------

struct DiagnoseOptions {
    ConfigOptions config;
    std::string corpus;
    std::string checkpoint;
    std::string strategy = "meta";
    std::size_t episodes = 100;
    std::string out;
};

int cmdDiagnose(const DiagnoseOptions& o) {
    const RunConfig c = resolveConfig(o.config);
    const auto policy = loadPolicy(o.checkpoint);
    if (o.strategy == "meta" && !policy) throw InvalidConfig("diagnose: strategy 'meta' needs --checkpoint");
    const auto strategy = parseStrategy(o.strategy, policy);
    const auto corpus = loadCorpus(o.corpus);
    const auto hc = c.harnessConfig();

    json episodes = json::array();
    std::vector<double> correlations;
    for (std::size_t e = 0; e < o.episodes; ++e) {
        const auto& task = corpus[e % corpus.size()];
        const auto seed = deriveSeed(c.seed, {kDiagnoseStream, e});
        const auto ep = strategyEpisode(task, strategy, seed, hc);
        json row{{"episode", e}, {"task", e % corpus.size()}, {"observed", ep.observedFinal.size()}};
        try {
            const double rho = slopeOrderingDiagnostic(ep, task);
            correlations.push_back(rho);
            row["slopeSpearman"] = rho;
        } catch (const UndefinedQuantity&) {
            row["slopeSpearman"] = nullptr;
        }
        episodes.push_back(row);
    }

    json slope{{"episodes", o.episodes}, {"defined", correlations.size()}};
    if (correlations.size() >= 2) {
        const auto ci = bootstrapMeanInterval(correlations, 0.95, 10000, deriveSeed(c.seed, {kDiagnoseStream + 1}));
        slope["mean"] = mean(correlations);
        slope["ci95"] = {ci.lo, ci.hi};
    }

    json ratios = json::array();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& t = corpus[i];
        ratios.push_back({{"task", i},
                          {"kappa", t.config().sparsity},
                          {"beta", t.config().width},
                          {"upsilon", upsilonNorm(t)},
                          {"predictedRatio", predictedGainRatio(t)}});
    }

    json report = manifest(c, "diagnose",
                           {{"corpus", o.corpus},
                            {"checkpoint", o.checkpoint},
                            {"strategy", o.strategy},
                            {"slopeOrdering", slope},
                            {"perEpisode", episodes},
                            {"predictedRatios", ratios}});
    writeJsonFile(fs::path(o.out) / "diagnose.json", report);
    if (slope.contains("mean"))
        std::printf("slope ordering: mean spearman %.4f, 95%% CI [%.4f, %.4f] over %zu episodes\n",
                    slope["mean"].get<double>(), slope["ci95"][0].get<double>(), slope["ci95"][1].get<double>(),
                    correlations.size());
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive sensor sampling for sparse field estimation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate-tasks", "Write a corpus of synthetic field tasks");
    addConfigOptions(g, gen.config);
    g->add_option("-o,--out", gen.out, "Output directory")->required();
    g->add_option("--split", gen.split, "Seed stream: train or test")->check(CLI::IsMember({"train", "test"}));
    g->add_option("--count", gen.count, "Tasks per (kappa, beta) cell (default: trainTasks or testTasks)");

    MetaTrainOptions mt;
    auto* m = app.add_subcommand("meta-train", "Train the mixture-weight policy on a task corpus");
    addConfigOptions(m, mt.config);
    m->add_option("--corpus", mt.corpus, "Task corpus directory")->required();
    m->add_option("-o,--out", mt.out, "Checkpoint path")->required();
    m->add_option("--log", mt.log, "Training log path (JSON lines; default <out>.log.jsonl)");

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "Compare sampling strategies on a task corpus");
    addConfigOptions(e, ev.config);
    e->add_option("--corpus", ev.corpus, "Task corpus directory")->required();
    e->add_option("--checkpoint", ev.checkpoint, "Policy checkpoint (needed for 'meta')");
    e->add_option("-s,--strategies", ev.strategies, "uniform, oracle, mixture:<rho>, meta");
    e->add_option("-o,--out", ev.out, "Output directory")->required();

    DiagnoseOptions dg;
    auto* d = app.add_subcommand("diagnose", "Slope-ordering statistic and predicted importance gains");
    addConfigOptions(d, dg.config);
    d->add_option("--corpus", dg.corpus, "Task corpus directory")->required();
    d->add_option("--checkpoint", dg.checkpoint, "Policy checkpoint (needed for 'meta')");
    d->add_option("--strategy", dg.strategy, "Strategy to roll out");
    d->add_option("--episodes", dg.episodes, "Episodes for the slope statistic");
    d->add_option("-o,--out", dg.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*g) return cmdGenerate(gen);
        if (*m) return cmdMetaTrain(mt);
        if (*e) return cmdEvaluate(ev);
        if (*d) return cmdDiagnose(dg);
    } catch (const InvalidConfig& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kConfig;
    } catch (const IoError& err) {
        std::cerr << "I/O error: " << err.what() << "\n";
        return kIo;
    } catch (const ContractViolation& err) {
        std::cerr << "contract violation: " << err.what() << "\n";
        return kContract;
    } catch (const UndefinedQuantity& err) {
        std::cerr << "undefined quantity: " << err.what() << "\n";
        return kContract;
    }
    return kUsage;
}
