#pragma once

#include <cstdint>
#include <string>

#include "churnforge/dataset.hpp"
#include "churnforge/history.hpp"

namespace churnforge {

/// Generator for reproducible fixture histories. Every XML/XSLT file it
/// writes stays well-formed across edits, so code metrics are populated.
struct SynthHistoryOptions {
  std::string project = "synthetic";
  std::uint64_t seed = 1;
  std::size_t revisions = 150;
  std::size_t developers = 5;
  Timestamp start = 1136073600;  // 2006-01-01
  std::int64_t span_seconds = 3 * 365 * kSecondsPerDay;
  /// Positive: edits per commit grow over time. Negative: they shrink.
  double trend = 1.0;
  /// Only create files and append lines, like a project that never
  /// modifies or removes code.
  bool additions_only = false;
};

HistoryBundle synth_history(const SynthHistoryOptions& options);

/// A row-level dataset with organisational features taken from a synthetic
/// history and targets planted as a linear function of three of them plus
/// Gaussian noise. With sign < 0 the relation is mirrored, which yields a
/// project whose churn falls where the other one's rises.
struct PlantedOptions {
  std::string project = "planted";
  std::uint64_t seed = 1;
  /// Seed of the underlying history; 0 reuses `seed`. Two projects that share
  /// it have identical feature rows and differ only in their targets.
  std::uint64_t history_seed = 0;
  std::size_t rows = 1000;
  double sign = 1.0;
  /// Noise standard deviation as a fraction of the noiseless target range.
  double noise_fraction = 0.05;
};

/// Org-feature columns that drive the planted targets.
inline constexpr std::size_t kPlantedFeatureIndices[3] = {9, 10, 7};

Dataset planted_dataset(const PlantedOptions& options);

}  // namespace churnforge
