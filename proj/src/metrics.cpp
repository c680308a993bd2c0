#include "churnforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "churnforge/error.hpp"

namespace churnforge {

namespace {

void check(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "predicted and actual differ in length");
  if (a.empty()) throw Error(Errc::EmptyInput, "no values to evaluate");
}

void flag(bool* out, bool v) {
  if (out) *out = v;
}

// Counts pairs of equal values in a sorted run-length sense.
std::int64_t tied_pairs(const std::vector<double>& sorted) {
  std::int64_t ties = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

// Merge sort counting the swaps needed (discordant pairs on y once the
// sequence is ordered by x).
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      buf[k++] = v[j++];
      swaps += static_cast<std::int64_t>(mid - i);
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y, bool* undefined) {
  check(x, y);
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    flag(undefined, true);
    return 0.0;
  }
  flag(undefined, false);
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y, bool* undefined) {
  check(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const std::int64_t n1 = tied_pairs(xs);
  std::int64_t n3 = 0;  // pairs tied in both x and y
  {
    std::int64_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
        ++run;
      } else {
        n3 += run * (run - 1) / 2;
        run = 1;
      }
    }
  }
  std::vector<double> buf(n);
  const std::int64_t swaps = merge_count(ys, buf, 0, n);
  const std::int64_t n2 = tied_pairs(ys);  // ys is sorted now

  const double denom = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
  if (!(denom > 0.0)) {
    flag(undefined, true);
    return 0.0;
  }
  flag(undefined, false);
  const double numer = static_cast<double>(n0 - n1 - n2 + n3) - 2.0 * static_cast<double>(swaps);
  return std::clamp(numer / denom, -1.0, 1.0);
}

EvalMetrics eval_metrics(std::span<const double> predicted, std::span<const double> actual) {
  check(predicted, actual);
  EvalMetrics m;
  m.pearson = pearson(predicted, actual, &m.pearson_undefined);
  m.kendall = kendall_tau_b(predicted, actual, &m.kendall_undefined);

  const auto n = static_cast<double>(actual.size());
  double abs_sum = 0.0, sq_sum = 0.0, actual_sum = 0.0;
  double lo = actual[0], hi = actual[0];
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = predicted[i] - actual[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    actual_sum += actual[i];
    lo = std::min(lo, actual[i]);
    hi = std::max(hi, actual[i]);
  }
  m.mae = abs_sum / n;
  // Power-mean inequality; the max only absorbs last-bit rounding.
  m.rmsd = std::max(std::sqrt(sq_sum / n), m.mae);
  const double mean_actual = actual_sum / n;
  if (mean_actual != 0.0) {
    m.nmae = m.mae / mean_actual;
  } else {
    m.nmae_undefined = true;
  }
  if (hi > lo) {
    m.nrmsd = m.rmsd / (hi - lo);
  } else {
    m.nrmsd_undefined = true;
  }
  return m;
}

}  // namespace churnforge
