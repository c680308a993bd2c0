#pragma once

// Straight-from-the-definition reference implementations. They share no
// code with the library and favour obviousness over speed.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "churnforge/history.hpp"

namespace oracle {

/// Classic O(n*m) longest-common-subsequence table.
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Recomputes all 13 organisational features for revision i from the
/// revisions [0, i] alone, for every i.
std::vector<std::array<std::int64_t, 13>> org_features(const churnforge::HistoryBundle& bundle);

struct WindowRow {
  std::array<std::int64_t, 3> target{};  // added, modified, deleted
  bool eligible = false;
};

struct SeriesPoint {
  std::int64_t timestamp = 0;
  std::array<std::int64_t, 3> churn{};
};

/// Quadratic windowed sum over (t, t + horizon].
std::vector<WindowRow> window_targets(const std::vector<SeriesPoint>& series, std::int64_t horizon,
                                      std::int64_t extraction);

struct Metrics {
  double pearson, kendall, mae, nmae, rmsd, nrmsd;
};

/// Six measures from their textbook formulas; Kendall tau-b over all pairs.
Metrics metrics(const std::vector<double>& predicted, const std::vector<double>& actual);

}  // namespace oracle
