#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "churnforge/experiments.hpp"

namespace churnforge {

std::string_view to_string(CellStatus s);
CellStatus cell_status_from_string(std::string_view s);

/// Marker used in the project columns for the pooled share of a unified run.
inline constexpr std::string_view kPooledScope = "(pooled)";

/// One evaluated cell, flattened for the results CSV shared by the within,
/// cross and unified reports.
struct ResultRecord {
  std::string experiment;  // within | cross | unified
  Algorithm algorithm = Algorithm::DecisionTree;
  FeatureSet feature_set = FeatureSet::Org;
  Target target = Target::Added;
  std::string train_project;
  std::string test_project;
  CellStatus status = CellStatus::Ok;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  EvalMetrics metrics;
  std::string note;
};

std::vector<ResultRecord> within_records(const std::string& project, Algorithm algo, FeatureSet fs,
                                         const std::vector<CellResult>& cells);
std::vector<ResultRecord> cross_records(const CrossProjectMatrix& matrix, Algorithm algo, FeatureSet fs);
std::vector<ResultRecord> unified_records(const UnifiedResult& result, Algorithm algo, FeatureSet fs);

std::string results_csv(const std::vector<ResultRecord>& records);
std::vector<ResultRecord> parse_results_csv(std::string_view text);

/// Mean and median of one measure over the cells that define it.
struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

/// The measures summarised per (algorithm, operation) row.
inline constexpr std::string_view kSummaryMeasures[] = {"pearson", "kendall", "nmae", "nrmsd"};

struct SummaryRow {
  Algorithm algorithm;
  Target target;
  std::size_t cells = 0;    // Ok cells contributing to the row
  std::size_t skipped = 0;  // skipped or failed cells
  Summary measures[4];      // in kSummaryMeasures order
};

/// Rows DT/NN x Added/Removed/Modified aggregated across the records. For
/// unified runs the pooled scope is left out so each project counts once.
std::vector<SummaryRow> summarise(const std::vector<ResultRecord>& records);

/// How line churn is counted, printed under every summary table.
inline constexpr std::string_view kChurnConvention =
    "Churn per diff hunk replacing a old lines with b new lines: modified = min(a, b), added = max(0, b - a), "
    "removed = max(0, a - b).";

/// The table is followed by the caption and the churn convention.
std::string summary_markdown(const std::vector<SummaryRow>& rows, std::string_view caption);
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Full Markdown report for one experiment: the summary table followed by
/// per-cell detail (a matrix per algorithm and target for cross runs).
std::string experiment_markdown(std::string_view experiment, const std::vector<ResultRecord>& records);

}  // namespace churnforge
