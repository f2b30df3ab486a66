#include "adaptsense/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace adaptsense {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<double> toStd(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd toEigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void expectSchema(const json& j, const char* schema) {
    if (!j.is_object() || !j.contains("schema") || j.at("schema") != schema)
        throw IoError(std::string("expected a document with schema '") + schema + "'");
}

template <typename T>
T field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw IoError(std::string("field '") + key + "': " + e.what());
    }
}

} // namespace

std::string formatDouble(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json taskToJson(const FieldTask& task) {
    const auto& c = task.config();
    return json{
        {"schema", kTaskSchema},
        {"config",
         {{"K", c.kernels},
          {"kappa", c.sparsity},
          {"beta", c.width},
          {"n", c.sensors},
          {"noiseStd", c.noiseStd},
          {"domain", {c.domain.lo, c.domain.hi}}}},
        {"seed", task.seed()},
        {"centers", toStd(task.basis().centers)},
        {"trueWeights", toStd(task.trueWeights())},
        {"sensorLocations", toStd(task.locations())},
        {"observations", toStd(task.observations())},
    };
}

FieldTask taskFromJson(const json& j) {
    expectSchema(j, kTaskSchema);
    const auto& cj = j.at("config");
    TaskConfig c;
    c.kernels = field<Eigen::Index>(cj, "K");
    c.sparsity = field<Eigen::Index>(cj, "kappa");
    c.width = field<double>(cj, "beta");
    c.sensors = field<Eigen::Index>(cj, "n");
    c.noiseStd = field<double>(cj, "noiseStd");
    const auto d = field<std::vector<double>>(cj, "domain");
    if (d.size() != 2) throw IoError("task: domain must be [lo, hi]");
    c.domain = {d[0], d[1]};
    try {
        c.validate();
        auto centers = toEigen(field<std::vector<double>>(j, "centers"));
        auto weights = toEigen(field<std::vector<double>>(j, "trueWeights"));
        auto locations = toEigen(field<std::vector<double>>(j, "sensorLocations"));
        auto obs = toEigen(field<std::vector<double>>(j, "observations"));
        if (centers.size() != c.kernels || locations.size() != c.sensors)
            throw IoError("task: array lengths disagree with config");
        return FieldTask(c, field<std::uint64_t>(j, "seed"), KernelBasis(std::move(centers), c.width),
                         std::move(weights), std::move(locations), std::move(obs));
    } catch (const ContractViolation& e) {
        throw IoError(std::string("task: ") + e.what());
    } catch (const InvalidConfig& e) {
        throw IoError(std::string("task: ") + e.what());
    }
}

json policyToJson(const PolicyParams& p) {
    std::vector<double> w1;
    for (Eigen::Index r = 0; r < p.W1.rows(); ++r)
        for (Eigen::Index c = 0; c < p.W1.cols(); ++c) w1.push_back(p.W1(r, c));
    return json{
        {"schema", kPolicySchema},
        {"hidden", p.hidden()},
        {"inputs", kFeatureCount},
        {"W1", w1},
        {"b1", toStd(p.b1)},
        {"w2", std::vector<double>(p.w2.data(), p.w2.data() + p.w2.size())},
        {"b2", p.b2},
    };
}

PolicyParams policyFromJson(const json& j) {
    expectSchema(j, kPolicySchema);
    const auto hidden = field<Eigen::Index>(j, "hidden");
    if (hidden < 1) throw IoError("policy: hidden width must be >= 1");
    if (field<Eigen::Index>(j, "inputs") != kFeatureCount) throw IoError("policy: input width mismatch");
    const auto w1 = field<std::vector<double>>(j, "W1");
    const auto b1 = field<std::vector<double>>(j, "b1");
    const auto w2 = field<std::vector<double>>(j, "w2");
    const auto h = static_cast<std::size_t>(hidden);
    if (w1.size() != h * kFeatureCount || b1.size() != h || w2.size() != h)
        throw IoError("policy: parameter shapes do not match hidden width");
    auto p = PolicyParams::zeros(hidden);
    for (Eigen::Index r = 0; r < hidden; ++r)
        for (Eigen::Index c = 0; c < kFeatureCount; ++c)
            p.W1(r, c) = w1[static_cast<std::size_t>(r * kFeatureCount + c)];
    p.b1 = toEigen(b1);
    p.w2 = toEigen(w2).transpose();
    p.b2 = field<double>(j, "b2");
    if (!p.flatten().allFinite()) throw IoError("policy: non-finite parameter");
    return p;
}

json modelToJson(const ModelState& m) {
    return json{{"schema", kModelSchema}, {"step", m.step}, {"weights", toStd(m.weights)}};
}

ModelState modelFromJson(const json& j) {
    expectSchema(j, kModelSchema);
    ModelState m{toEigen(field<std::vector<double>>(j, "weights")), field<std::int64_t>(j, "step")};
    if (m.step < 1 || !m.weights.allFinite()) throw IoError("model: invalid step or weights");
    return m;
}

json episodeRecordToJson(const EpisodeRecord& r) {
    return json{{"candidate", r.candidate},     {"task", r.task},
                {"episode", r.episode},         {"return", r.episodeReturn},
                {"observed", r.observed},       {"initialLoss", r.initialLoss},
                {"finalLoss", r.finalLoss},     {"clipped", r.clipped}};
}

json readJsonFile(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void writeTextFile(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void writeJsonFile(const fs::path& path, const json& j) { writeTextFile(path, j.dump(2) + "\n"); }

std::vector<FieldTask> loadCorpus(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<FieldTask> tasks;
    for (const auto& f : files) {
        auto j = readJsonFile(f);
        if (j.is_object() && j.value("schema", "") == kTaskSchema) tasks.push_back(taskFromJson(j));
    }
    if (tasks.empty()) throw IoError("no task files in " + dir.string());
    return tasks;
}

std::string curvesCsv(const ComparisonTable& table, const std::string& metric, const std::string& hash) {
    require(metric == "mse" || metric == "comm", "curvesCsv: metric must be mse or comm");
    std::ostringstream os;
    os << "# config_hash=" << hash << "\n";
    os << "step,strategy,kappa,beta,mean,stderr\n";
    for (const auto& g : table.groups) {
        for (std::size_t s = 0; s < table.strategies.size(); ++s) {
            const auto& m = g.perStrategy[s];
            const auto& curve = metric == "mse" ? m.mseCurve : m.commCurve;
            for (std::size_t t = 0; t < curve.size(); ++t) {
                const double se = metric == "mse" ? m.mseStderr(t) : m.commStderr(t);
                os << (t + 1) << ',' << table.strategies[s] << ',' << g.key.kappa << ','
                   << formatDouble(g.key.beta) << ',' << formatDouble(curve[t]) << ',' << formatDouble(se) << '\n';
            }
        }
    }
    return os.str();
}

std::string summaryCsv(const ComparisonTable& table, const std::string& hash) {
    std::ostringstream os;
    os << "# config_hash=" << hash << "\n";
    os << "kappa,beta,strategy,tasks,final_mse,final_mse_stderr,final_comm,final_objective,margin\n";
    for (const auto& r : table.summary) {
        os << r.key.kappa << ',' << formatDouble(r.key.beta) << ',' << r.strategy << ',' << r.tasks << ','
           << formatDouble(r.finalMse) << ',' << formatDouble(r.finalMseStderr) << ',' << formatDouble(r.finalComm)
           << ',' << formatDouble(r.finalObjective) << ',' << formatDouble(r.margin) << '\n';
    }
    return os.str();
}

std::string taskCsv(const ComparisonTable& table, const std::string& hash) {
    std::ostringstream os;
    os << "# config_hash=" << hash << "\n";
    os << "task,kappa,beta,upsilon,predicted_ratio,importance_margin";
    for (const auto& s : table.strategies) os << ",final_mse_" << s;
    os << '\n';
    for (const auto& r : table.tasks) {
        os << r.task << ',' << r.key.kappa << ',' << formatDouble(r.key.beta) << ',' << formatDouble(r.upsilon) << ','
           << formatDouble(r.predictedRatio) << ',' << (r.importanceMargin ? formatDouble(*r.importanceMargin) : "");
        for (auto v : r.finalMse) os << ',' << formatDouble(v);
        os << '\n';
    }
    return os.str();
}

} // namespace adaptsense
