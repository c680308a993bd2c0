#pragma once

#include <span>

namespace churnforge {

/// The six validation measures. Undefined quantities (a constant side for
/// the correlations, a zero actual mean for NMAE, a zero actual range for
/// NRMSD) are reported as 0 with the matching flag set, never NaN.
struct EvalMetrics {
  double pearson = 0.0;
  double kendall = 0.0;
  double mae = 0.0;
  double nmae = 0.0;
  double rmsd = 0.0;
  double nrmsd = 0.0;
  bool pearson_undefined = false;
  bool kendall_undefined = false;
  bool nmae_undefined = false;
  bool nrmsd_undefined = false;
};

/// Throws Error(LengthMismatch) or Error(EmptyInput).
EvalMetrics eval_metrics(std::span<const double> predicted, std::span<const double> actual);

/// Sample Pearson correlation; `undefined` is set (and 0 returned) when
/// either side is constant.
double pearson(std::span<const double> x, std::span<const double> y, bool* undefined = nullptr);

/// Kendall tau-b in O(n log n) (Knight's merge-sort method).
double kendall_tau_b(std::span<const double> x, std::span<const double> y, bool* undefined = nullptr);

}  // namespace churnforge
