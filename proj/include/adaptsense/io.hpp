#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptsense/field.hpp"
#include "adaptsense/harness.hpp"
#include "adaptsense/learner.hpp"
#include "adaptsense/meta.hpp"
#include "adaptsense/policy.hpp"

namespace adaptsense {

inline constexpr const char* kTaskSchema = "adaptsense.task/1";
inline constexpr const char* kPolicySchema = "adaptsense.policy/1";
inline constexpr const char* kModelSchema = "adaptsense.model/1";

// Readers throw IoError on a wrong schema tag, missing field or shape mismatch.

nlohmann::json taskToJson(const FieldTask& task);
FieldTask taskFromJson(const nlohmann::json& j);

nlohmann::json policyToJson(const PolicyParams& p);
PolicyParams policyFromJson(const nlohmann::json& j);

nlohmann::json modelToJson(const ModelState& m);
ModelState modelFromJson(const nlohmann::json& j);

nlohmann::json episodeRecordToJson(const EpisodeRecord& r);

nlohmann::json readJsonFile(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; output is a pure function of `j`.
void writeJsonFile(const std::filesystem::path& path, const nlohmann::json& j);
void writeTextFile(const std::filesystem::path& path, const std::string& text);

/// Every *.json file in `dir` whose schema is a task, in file-name order.
std::vector<FieldTask> loadCorpus(const std::filesystem::path& dir);

/// Shortest round-trip decimal form.
std::string formatDouble(double v);

/// Long-format curves: step,strategy,kappa,beta,mean,stderr. `metric` is
/// "mse" or "comm". The first line is a "# config_hash=..." comment.
std::string curvesCsv(const ComparisonTable& table, const std::string& metric, const std::string& hash);
std::string summaryCsv(const ComparisonTable& table, const std::string& hash);
std::string taskCsv(const ComparisonTable& table, const std::string& hash);

} // namespace adaptsense
