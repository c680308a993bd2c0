#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "churnforge/dataset.hpp"
#include "churnforge/learners.hpp"

namespace churnforge {

inline constexpr std::string_view kToolName = "churn-forge";
inline constexpr std::string_view kToolVersion = "0.1.0";

struct ProjectSource {
  std::string name;
  /// Exactly one of the two is set. `spelled` keeps the path as written in
  /// the config so manifests do not depend on where the config lives.
  std::optional<std::filesystem::path> bundle;
  std::optional<std::filesystem::path> repo;
  std::string spelled;
};

enum class Experiment { Within, Cross, Unified, All };
std::string_view to_string(Experiment e);
Experiment experiment_from_string(std::string_view s);

struct RunConfig {
  std::vector<ProjectSource> projects;
  std::int64_t horizon_days = 365;
  FeatureSet feature_set = FeatureSet::Org;
  std::vector<Algorithm> algorithms = {Algorithm::DecisionTree, Algorithm::NeuralNetwork};
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "churn-forge-out";
  Experiment experiment = Experiment::All;
  std::size_t jobs = 1;
  bool per_file = false;
};

/// Parses the JSON config. Relative paths resolve against `base_dir`.
/// Throws Error(ConfigInvalid) on syntax errors, unknown keys or bad values.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fills the seed from CHURN_FORGE_SEED when absent and checks the
/// invariants: a seed, unique file-safe names, existing paths, at least one
/// algorithm, positive horizon and jobs. Throws Error(ConfigInvalid).
void finalize_run_config(RunConfig& config);

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::string> failed_steps;
};

/// Runs ingest, features, dataset, training, evaluation and reporting,
/// writing the artifact tree under `config.output_dir`. A failing project
/// only fails its own cells; the outcome lists every failed step.
RunOutcome run_pipeline(const RunConfig& config);

/// Revision-level feature table: project_id, revision_id, timestamp, all 74
/// features and the experimental active_developers_to_date column.
std::string revision_features_csv(const std::string& project, const HistoryBundle& bundle,
                                  const XmlMetricOptions& xml = {});

}  // namespace churnforge
