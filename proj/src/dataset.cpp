#include "churnforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "churnforge/error.hpp"
#include "churnforge/org_features.hpp"
#include "churnforge/rng.hpp"

namespace churnforge {

std::string_view to_string(Target t) {
  switch (t) {
    case Target::Added: return "added";
    case Target::Modified: return "modified";
    case Target::Deleted: return "deleted";
  }
  return "added";
}

Target target_from_string(std::string_view s) {
  if (s == "added") return Target::Added;
  if (s == "modified") return Target::Modified;
  if (s == "deleted" || s == "removed") return Target::Deleted;
  throw std::invalid_argument("unknown target '" + std::string(s) + "'");
}

std::string_view to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::Org: return "org";
    case FeatureSet::Code: return "code";
    case FeatureSet::All: return "all";
  }
  return "all";
}

FeatureSet feature_set_from_string(std::string_view s) {
  if (s == "org") return FeatureSet::Org;
  if (s == "code") return FeatureSet::Code;
  if (s == "all") return FeatureSet::All;
  throw std::invalid_argument("unknown feature set '" + std::string(s) + "'");
}

double ChurnTarget::get(Target t) const {
  switch (t) {
    case Target::Added: return static_cast<double>(cumulative_yearly_added);
    case Target::Modified: return static_cast<double>(cumulative_yearly_modified);
    case Target::Deleted: return static_cast<double>(cumulative_yearly_deleted);
  }
  return 0.0;
}

namespace {

void add(ChurnTarget& t, const Churn& c, int sign) {
  t.cumulative_yearly_added += sign * c.added;
  t.cumulative_yearly_modified += sign * c.modified;
  t.cumulative_yearly_deleted += sign * c.deleted;
}

}  // namespace

std::vector<TargetWindow> compute_targets(const std::vector<RevisionChurn>& series, std::int64_t horizon,
                                          Timestamp extraction_timestamp) {
  // Two pointers over the sorted series: the window for row i is (lo, hi].
  std::vector<TargetWindow> out(series.size());
  ChurnTarget window;
  std::size_t lo = 0;  // first index with timestamp > t_i
  std::size_t hi = 0;  // first index with timestamp > t_i + horizon
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Timestamp t = series[i].timestamp;
    while (hi < series.size() && series[hi].timestamp <= t + horizon) {
      add(window, series[hi].totals, +1);
      ++hi;
    }
    while (lo < hi && series[lo].timestamp <= t) {
      add(window, series[lo].totals, -1);
      ++lo;
    }
    out[i].target = window;
    out[i].eligible = t + horizon <= extraction_timestamp;
  }
  return out;
}

std::vector<std::size_t> Dataset::eligible_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].eligible) idx.push_back(i);
  }
  return idx;
}

std::vector<std::string> feature_names(FeatureSet set, const XmlMetricOptions& xml) {
  std::vector<std::string> names;
  if (set != FeatureSet::Code) {
    for (auto n : org_feature_names()) names.emplace_back(n);
  }
  if (set != FeatureSet::Org) {
    for (auto& n : code_feature_names(xml)) names.push_back(std::move(n));
  }
  return names;
}

namespace {

std::vector<double> feature_row(const OrgFeatures& org, const CodeFeatures& code, FeatureSet set) {
  std::vector<double> row;
  if (set != FeatureSet::Code) {
    const auto v = org.values();
    row.insert(row.end(), v.begin(), v.end());
  }
  if (set != FeatureSet::Org) {
    const auto v = code.values();
    row.insert(row.end(), v.begin(), v.end());
  }
  return row;
}

// Per-file targets: each (revision, path) sums that path's churn over the window.
std::vector<std::vector<ChurnTarget>> per_file_targets(const std::vector<RevisionChurn>& series,
                                                       std::int64_t horizon) {
  struct Event {
    std::size_t rev;
    std::size_t slot;
  };
  std::map<std::string, std::vector<Event>> by_path;
  std::vector<std::vector<ChurnTarget>> out(series.size());
  for (std::size_t r = 0; r < series.size(); ++r) {
    out[r].resize(series[r].per_file.size());
    for (std::size_t s = 0; s < series[r].per_file.size(); ++s) by_path[series[r].per_file[s].path].push_back({r, s});
  }
  for (const auto& [path, events] : by_path) {
    ChurnTarget window;
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const Timestamp t = series[events[i].rev].timestamp;
      while (hi < events.size() && series[events[hi].rev].timestamp <= t + horizon) {
        add(window, series[events[hi].rev].per_file[events[hi].slot].churn, +1);
        ++hi;
      }
      while (lo < hi && series[events[lo].rev].timestamp <= t) {
        add(window, series[events[lo].rev].per_file[events[lo].slot].churn, -1);
        ++lo;
      }
      out[events[i].rev][events[i].slot] = window;
    }
  }
  return out;
}

}  // namespace

Dataset build_dataset(std::string project_id, const HistoryBundle& bundle, const DatasetOptions& options) {
  const auto org = scan_history(bundle);
  std::vector<CodeFeatures> code;
  if (options.feature_set != FeatureSet::Org) code = code_feature_series(bundle, options.xml);
  const auto churn = churn_of_history(bundle);
  const auto windows = compute_targets(churn, options.horizon_seconds, bundle.extraction_timestamp);

  Dataset ds;
  ds.feature_names = feature_names(options.feature_set, options.xml);
  const CodeFeatures empty_code(options.xml.tracked_xslt_elements.size());
  std::vector<std::vector<ChurnTarget>> file_targets;
  if (options.per_file) file_targets = per_file_targets(churn, options.horizon_seconds);

  for (std::size_t i = 0; i < bundle.revisions.size(); ++i) {
    const auto& rev = bundle.revisions[i];
    DatasetRow row;
    row.project_id = project_id;
    row.revision_id = rev.revision_id;
    row.timestamp = rev.timestamp;
    row.features = feature_row(org[i].features, code.empty() ? empty_code : code[i], options.feature_set);
    row.eligible = windows[i].eligible;
    if (!options.per_file) {
      row.target = windows[i].target;
      ds.rows.push_back(std::move(row));
      continue;
    }
    for (std::size_t s = 0; s < churn[i].per_file.size(); ++s) {
      DatasetRow file_row = row;
      file_row.path = churn[i].per_file[s].path;
      file_row.target = file_targets[i][s];
      ds.rows.push_back(std::move(file_row));
    }
  }
  return ds;
}

Dataset select_features(const Dataset& full, FeatureSet set, const XmlMetricOptions& xml) {
  const auto wanted = feature_names(set, xml);
  std::vector<std::size_t> cols;
  for (const auto& name : wanted) {
    auto it = std::find(full.feature_names.begin(), full.feature_names.end(), name);
    if (it == full.feature_names.end()) throw Error(Errc::SchemaMismatch, "dataset lacks feature " + name);
    cols.push_back(static_cast<std::size_t>(it - full.feature_names.begin()));
  }
  Dataset out;
  out.feature_names = wanted;
  out.rows.reserve(full.rows.size());
  for (const auto& r : full.rows) {
    DatasetRow row = r;
    row.features.clear();
    for (std::size_t c : cols) row.features.push_back(r.features[c]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

Matrix feature_matrix(const Dataset& ds, std::span<const std::size_t> indices) {
  Matrix m(indices.size(), ds.feature_names.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& f = ds.rows[indices[i]].features;
    if (f.size() != m.cols) throw Error(Errc::SchemaMismatch, "row width differs from the feature schema");
    std::copy(f.begin(), f.end(), m.row(i).begin());
  }
  return m;
}

std::vector<double> target_vector(const Dataset& ds, std::span<const std::size_t> indices, Target t) {
  std::vector<double> y;
  y.reserve(indices.size());
  for (std::size_t i : indices) y.push_back(ds.rows[i].target.get(t));
  return y;
}

MinMaxParams fit_target_scaling(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::EmptyInput, "cannot fit scaling on an empty column");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) throw Error(Errc::DegenerateTarget, "target is constant (" + std::to_string(*lo) + ")");
  return {*lo, *hi};
}

std::vector<MinMaxParams> fit_feature_scaling(const Matrix& x) {
  std::vector<MinMaxParams> params(x.cols);
  for (std::size_t j = 0; j < x.cols; ++j) {
    double lo = x.rows ? x(0, j) : 0.0;
    double hi = lo;
    for (std::size_t i = 1; i < x.rows; ++i) {
      lo = std::min(lo, x(i, j));
      hi = std::max(hi, x(i, j));
    }
    params[j] = {lo, hi};
  }
  return params;
}

Holdout random_holdout(std::size_t n, std::uint64_t seed, double train_fraction) {
  if (n < 10) throw Error(Errc::TooFewRows, "holdout needs at least 10 rows, got " + std::to_string(n));
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  Holdout h;
  h.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  h.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(h.train.begin(), h.train.end());
  std::sort(h.test.begin(), h.test.end());
  return h;
}

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed, std::size_t cap) {
  if (k < 2) throw std::invalid_argument("k-fold needs k >= 2");
  if (n < k) throw Error(Errc::TooFewRows, std::to_string(k) + "-fold needs at least k rows");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  const std::size_t used = std::min(n, cap);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = used / k + (f < used % k ? 1 : 0);
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                    perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(folds[f].begin(), folds[f].end());
    pos += size;
  }
  return folds;
}

std::vector<std::pair<std::string, Holdout>> leave_project_out(const std::vector<std::string>& project_ids) {
  std::vector<std::string> order;
  for (const auto& p : project_ids) {
    if (std::find(order.begin(), order.end(), p) == order.end()) order.push_back(p);
  }
  std::vector<std::pair<std::string, Holdout>> out;
  for (const auto& p : order) {
    Holdout h;
    for (std::size_t i = 0; i < project_ids.size(); ++i) (project_ids[i] == p ? h.test : h.train).push_back(i);
    out.emplace_back(p, std::move(h));
  }
  return out;
}

std::uint64_t holdout_seed(std::uint64_t seed, std::string_view project) {
  return derive_seed(seed, "holdout/" + std::string(project));
}

Holdout stratified_holdout(const std::vector<std::string>& project_ids, std::uint64_t seed, double train_fraction) {
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < project_ids.size(); ++i) members[project_ids[i]].push_back(i);
  Holdout out;
  for (const auto& [project, idx] : members) {
    const Holdout local = random_holdout(idx.size(), holdout_seed(seed, project), train_fraction);
    for (std::size_t i : local.train) out.train.push_back(idx[i]);
    for (std::size_t i : local.test) out.test.push_back(idx[i]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace churnforge
