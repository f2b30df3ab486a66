#include "adaptsense/config.hpp"
#include "adaptsense/parallel.hpp"

#include <cstdio>
#include <cstdlib>
#include <set>
#include <thread>

namespace adaptsense {

using nlohmann::json;

namespace {

void rejectUnknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw InvalidConfig(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!known.contains(k)) throw InvalidConfig(where + ": unknown key '" + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidConfig(where + "." + key + ": " + e.what());
    }
}

} // namespace

void RunConfig::validate() const {
    task.validate();
    requireConfig(!kappas.empty() && !betas.empty(), "RunConfig: kappa and beta sweeps must be nonempty");
    for (auto k : kappas) taskConfig(k, task.width).validate();
    for (auto b : betas) requireConfig(b > 0.0, "RunConfig: beta values must be positive");
    metaTrainConfig().validate();
    requireConfig(trainTasks >= 2, "RunConfig: need at least two training tasks");
    requireConfig(testTasks >= 1 && seedsPerTask >= 1, "RunConfig: need at least one test task and seed");
    requireConfig(horizon >= 1, "RunConfig: horizon must be >= 1");
    requireConfig(!strategies.empty(), "RunConfig: no strategies");
    for (const auto& s : strategies) {
        if (s == "meta") continue;
        (void)parseStrategy(s);
    }
}

TaskConfig RunConfig::taskConfig(Eigen::Index kappa, double beta) const {
    TaskConfig t = task;
    t.sparsity = kappa;
    t.width = beta;
    return t;
}

MetaTrainConfig RunConfig::metaTrainConfig() const {
    MetaTrainConfig m;
    m.learner = learner;
    m.reward = reward;
    m.hidden = hidden;
    m.initScale = initScale;
    m.horizon = horizon;
    m.episodesPerTask = episodesPerTask;
    m.evalTasks = evalTasks;
    m.evalSeeds = evalSeeds;
    m.maxCandidates = maxCandidates;
    m.workers = resolvedWorkers();
    return m;
}

HarnessConfig RunConfig::harnessConfig() const {
    return {learner, reward, horizon, resolvedWorkers()};
}

std::vector<std::uint64_t> RunConfig::evaluationSeeds() const {
    std::vector<std::uint64_t> s(seedsPerTask);
    for (std::size_t k = 0; k < seedsPerTask; ++k) s[k] = deriveSeed(seed, {31, k});
    return s;
}

std::size_t RunConfig::resolvedWorkers() const { return workers > 0 ? workers : defaultWorkerCount(); }

std::size_t defaultWorkerCount() {
    if (const char* env = std::getenv("ADAPTSENSE_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

json toJson(const RunConfig& c) {
    return json{
        {"field",
         {{"K", c.task.kernels},
          {"kappa", c.task.sparsity},
          {"beta", c.task.width},
          {"n", c.task.sensors},
          {"noiseStd", c.task.noiseStd},
          {"domain", {c.task.domain.lo, c.task.domain.hi}}}},
        {"sweep", {{"kappas", c.kappas}, {"betas", c.betas}}},
        {"learner",
         {{"gamma", c.learner.gamma},
          {"stepScale", c.learner.stepScale},
          {"importanceWeighting", c.learner.importanceWeighting}}},
        {"reward",
         {{"mu", c.reward.mu},
          {"lambda", c.reward.lambda},
          {"alpha", c.reward.alpha},
          {"meanBaseline", c.reward.meanBaseline},
          {"clipNorm", c.reward.clipNorm}}},
        {"policy", {{"hidden", c.hidden}, {"initScale", c.initScale}}},
        {"training",
         {{"horizon", c.horizon},
          {"episodesPerTask", c.episodesPerTask},
          {"trainTasks", c.trainTasks},
          {"evalTasks", c.evalTasks},
          {"evalSeeds", c.evalSeeds},
          {"maxCandidates", c.maxCandidates}}},
        {"evaluation", {{"testTasks", c.testTasks}, {"seedsPerTask", c.seedsPerTask}, {"strategies", c.strategies}}},
        {"seed", c.seed},
        {"workers", c.workers},
    };
}

RunConfig runConfigFromJson(const json& j) {
    RunConfig c;
    rejectUnknown(j, {"field", "sweep", "learner", "reward", "policy", "training", "evaluation", "seed", "workers"},
                  "config");
    if (j.contains("field")) {
        const auto& f = j.at("field");
        rejectUnknown(f, {"K", "kappa", "beta", "n", "noiseStd", "domain"}, "field");
        read(f, "K", c.task.kernels, "field");
        read(f, "kappa", c.task.sparsity, "field");
        read(f, "beta", c.task.width, "field");
        read(f, "n", c.task.sensors, "field");
        read(f, "noiseStd", c.task.noiseStd, "field");
        if (f.contains("domain")) {
            std::vector<double> d;
            read(f, "domain", d, "field");
            if (d.size() != 2) throw InvalidConfig("field.domain: expected [lo, hi]");
            c.task.domain = {d[0], d[1]};
        }
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        rejectUnknown(s, {"kappas", "betas"}, "sweep");
        read(s, "kappas", c.kappas, "sweep");
        read(s, "betas", c.betas, "sweep");
    }
    if (j.contains("learner")) {
        const auto& l = j.at("learner");
        rejectUnknown(l, {"gamma", "stepScale", "importanceWeighting"}, "learner");
        read(l, "gamma", c.learner.gamma, "learner");
        read(l, "stepScale", c.learner.stepScale, "learner");
        read(l, "importanceWeighting", c.learner.importanceWeighting, "learner");
    }
    if (j.contains("reward")) {
        const auto& r = j.at("reward");
        rejectUnknown(r, {"mu", "lambda", "alpha", "meanBaseline", "clipNorm"}, "reward");
        read(r, "mu", c.reward.mu, "reward");
        read(r, "lambda", c.reward.lambda, "reward");
        read(r, "alpha", c.reward.alpha, "reward");
        read(r, "meanBaseline", c.reward.meanBaseline, "reward");
        read(r, "clipNorm", c.reward.clipNorm, "reward");
    }
    if (j.contains("policy")) {
        const auto& p = j.at("policy");
        rejectUnknown(p, {"hidden", "initScale"}, "policy");
        read(p, "hidden", c.hidden, "policy");
        read(p, "initScale", c.initScale, "policy");
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        rejectUnknown(t, {"horizon", "episodesPerTask", "trainTasks", "evalTasks", "evalSeeds", "maxCandidates"},
                      "training");
        read(t, "horizon", c.horizon, "training");
        read(t, "episodesPerTask", c.episodesPerTask, "training");
        read(t, "trainTasks", c.trainTasks, "training");
        read(t, "evalTasks", c.evalTasks, "training");
        read(t, "evalSeeds", c.evalSeeds, "training");
        read(t, "maxCandidates", c.maxCandidates, "training");
    }
    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        rejectUnknown(e, {"testTasks", "seedsPerTask", "strategies"}, "evaluation");
        read(e, "testTasks", c.testTasks, "evaluation");
        read(e, "seedsPerTask", c.seedsPerTask, "evaluation");
        read(e, "strategies", c.strategies, "evaluation");
    }
    read(j, "seed", c.seed, "config");
    read(j, "workers", c.workers, "config");
    c.validate();
    return c;
}

RunConfig mergeConfig(const RunConfig& base, const json& patch) {
    json j = toJson(base);
    j.merge_patch(patch);
    return runConfigFromJson(j);
}

std::string configHash(const RunConfig& c) {
    json j = toJson(c);
    j.erase("workers");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace adaptsense
