#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "churnforge/dataset.hpp"
#include "churnforge/learners.hpp"
#include "churnforge/metrics.hpp"

namespace churnforge {

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::DecisionTree;
  std::uint64_t seed = 0;
  TreeConfig tree;
  NnConfig nn;  // nn.seed is replaced by a seed derived from `seed` per target
  std::size_t jobs = 1;
};

enum class CellStatus { Ok, Skipped, Failed };

/// Outcome of training + evaluating one (target, train set, test set) cell.
struct CellResult {
  Target target = Target::Added;
  CellStatus status = CellStatus::Ok;
  EvalMetrics metrics;
  std::string note;  // skip reason or error message
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

/// A dataset tagged with its project name.
struct ProjectData {
  std::string name;
  Dataset dataset;
};

std::uint64_t model_seed(std::uint64_t seed, Algorithm algo, Target target);

/// Trains one model; throws on TooFewRows, DegenerateTarget, NonFiniteLoss.
TrainedModel train_model(const Dataset& ds, std::span<const std::size_t> rows, Target target,
                         const ExperimentConfig& config);

/// Evaluates a model on the given rows (original LOC units).
EvalMetrics evaluate_model(const TrainedModel& model, const Dataset& ds, std::span<const std::size_t> rows);

/// 70/30 holdout on the eligible rows, one model per target. Degenerate
/// targets (constant on the training rows) are skipped. Throws
/// Error(TooFewRows) below 20 eligible rows.
std::vector<CellResult> run_within_project(const ProjectData& project, const ExperimentConfig& config,
                                           std::vector<std::optional<TrainedModel>>* models_out = nullptr);

/// k-fold cross-validation on up to 7000 eligible rows; one entry per
/// (fold, target), fold-major.
std::vector<CellResult> run_cross_validation(const ProjectData& project, std::size_t k,
                                             const ExperimentConfig& config);

struct CrossProjectMatrix {
  std::vector<std::string> projects;
  /// cells[target][train][test]; the diagonal is the within-project holdout.
  std::vector<std::vector<std::vector<CellResult>>> cells;

  const CellResult& at(Target t, std::size_t train, std::size_t test) const {
    return cells[static_cast<std::size_t>(t)][train][test];
  }
};

/// Off-diagonal cells train on all eligible rows of the row project and
/// test on all eligible rows of the column project. Failures stay local to
/// their cell.
CrossProjectMatrix run_cross_project(const std::vector<ProjectData>& projects, const ExperimentConfig& config);

struct UnifiedResult {
  std::vector<CellResult> pooled;  // one per target
  std::vector<std::string> projects;
  std::vector<std::vector<CellResult>> per_project;  // [project][target]
};

/// Pooled 70/30 holdout stratified by project (each project split exactly
/// as in `run_within_project`), one pooled model per target, evaluated on the
/// pooled test rows and on each project's share of them.
UnifiedResult run_unified(const std::vector<ProjectData>& projects, const ExperimentConfig& config,
                          std::vector<std::optional<TrainedModel>>* models_out = nullptr);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace churnforge
