#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "churnforge/churn.hpp"
#include "churnforge/history.hpp"
#include "churnforge/xml_features.hpp"

namespace churnforge {

enum class Target { Added, Modified, Deleted };
inline constexpr std::array<Target, 3> kAllTargets = {Target::Added, Target::Modified, Target::Deleted};

std::string_view to_string(Target t);
Target target_from_string(std::string_view s);

enum class FeatureSet { Org, Code, All };
std::string_view to_string(FeatureSet f);
FeatureSet feature_set_from_string(std::string_view s);

inline constexpr std::int64_t kDefaultHorizonSeconds = 365 * kSecondsPerDay;

struct ChurnTarget {
  std::int64_t cumulative_yearly_added = 0;
  std::int64_t cumulative_yearly_modified = 0;
  std::int64_t cumulative_yearly_deleted = 0;

  double get(Target t) const;
  bool operator==(const ChurnTarget&) const = default;
};

struct TargetWindow {
  ChurnTarget target;
  bool eligible = false;
};

/// For the revision at time t the target sums the churn totals of every
/// revision with timestamp in (t, t + horizon]; eligible iff
/// t + horizon <= extraction_timestamp. Input must be time-ordered.
std::vector<TargetWindow> compute_targets(const std::vector<RevisionChurn>& series, std::int64_t horizon_seconds,
                                          Timestamp extraction_timestamp);

struct DatasetRow {
  std::string project_id;
  std::string revision_id;
  Timestamp timestamp = 0;
  std::string path;  // set only in per-file mode
  std::vector<double> features;
  ChurnTarget target;
  bool eligible = false;
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<DatasetRow> rows;

  std::vector<std::size_t> eligible_indices() const;
};

struct DatasetOptions {
  FeatureSet feature_set = FeatureSet::All;
  std::int64_t horizon_seconds = kDefaultHorizonSeconds;
  /// One row per (revision, changed file) with targets summed over that
  /// path only, instead of one project-wide row per revision.
  bool per_file = false;
  XmlMetricOptions xml;
};

std::vector<std::string> feature_names(FeatureSet set, const XmlMetricOptions& xml = {});

/// Scans the bundle once: org features, code features, churn and targets.
Dataset build_dataset(std::string project_id, const HistoryBundle& bundle, const DatasetOptions& options = {});

/// Restricts a dataset with all 74 features to a subset.
Dataset select_features(const Dataset& full, FeatureSet set, const XmlMetricOptions& xml = {});

/// CSV with columns project_id, revision_id, timestamp, path, one column per
/// feature, target_added, target_modified, target_deleted, eligible.
std::string dataset_csv(const Dataset& ds);

/// Inverse of `dataset_csv`; feature columns are the ones between `path` and
/// `target_added`. Throws Error(MalformedCsv).
Dataset parse_dataset_csv(std::string_view text);

/// Dense row-major feature matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

Matrix feature_matrix(const Dataset& ds, std::span<const std::size_t> indices);
std::vector<double> target_vector(const Dataset& ds, std::span<const std::size_t> indices, Target t);

struct MinMaxParams {
  double min = 0.0;
  double max = 1.0;

  double scale(double v) const { return max > min ? (v - min) / (max - min) : 0.0; }
  double unscale(double v) const { return min + v * (max - min); }
  bool degenerate() const { return !(max > min); }
  bool operator==(const MinMaxParams&) const = default;
};

/// Fits min/max; throws Error(DegenerateTarget) when max == min and
/// Error(EmptyInput) when values is empty.
MinMaxParams fit_target_scaling(std::span<const double> values);

/// Per-column min/max; constant columns keep max == min and scale to 0.
std::vector<MinMaxParams> fit_feature_scaling(const Matrix& x);

struct Holdout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline constexpr double kTrainFraction = 0.70;
inline constexpr std::size_t kMaxCrossValidationRows = 7000;

/// Uniform unstratified sampling of round(n * fraction) training positions
/// from [0, n). Both halves are returned in ascending order. Throws
/// Error(TooFewRows) for n < 10.
Holdout random_holdout(std::size_t n, std::uint64_t seed, double train_fraction = kTrainFraction);

/// Caps the input at `cap` positions by uniform subsampling, then deals k
/// near-equal folds (the first n % k folds get one extra). Throws
/// Error(TooFewRows) for n < k.
std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed,
                                            std::size_t cap = kMaxCrossValidationRows);

/// One (train, test) pair per distinct project id, in first-appearance order;
/// each test set is one whole project. Indices refer to `project_ids`.
std::vector<std::pair<std::string, Holdout>> leave_project_out(const std::vector<std::string>& project_ids);

/// Holdout split run independently inside each project, with the seed of
/// each project derived as `derive_seed(seed, "holdout/" + project)`.
Holdout stratified_holdout(const std::vector<std::string>& project_ids, std::uint64_t seed,
                           double train_fraction = kTrainFraction);

std::uint64_t holdout_seed(std::uint64_t seed, std::string_view project);

}  // namespace churnforge
