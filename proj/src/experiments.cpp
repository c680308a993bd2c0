#include "churnforge/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "churnforge/error.hpp"
#include "churnforge/log.hpp"
#include "churnforge/rng.hpp"

namespace churnforge {

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t model_seed(std::uint64_t seed, Algorithm algo, Target target) {
  return derive_seed(seed, "model/" + std::string(to_string(algo)) + "/" + std::string(to_string(target)));
}

namespace {

void warn_if_constant_features(const Matrix& x) {
  for (const auto& p : fit_feature_scaling(x)) {
    if (!p.degenerate()) return;
  }
  log::warn("train", "ConstantFeatures: every feature is constant on the training rows");
}

std::vector<std::size_t> map_positions(const std::vector<std::size_t>& base, const std::vector<std::size_t>& pos) {
  std::vector<std::size_t> out;
  out.reserve(pos.size());
  for (std::size_t p : pos) out.push_back(base[p]);
  return out;
}

CellResult failed_cell(Target t, const std::exception& e) {
  CellResult c;
  c.target = t;
  const auto* err = dynamic_cast<const Error*>(&e);
  c.status = err && err->code() == Errc::DegenerateTarget ? CellStatus::Skipped : CellStatus::Failed;
  c.note = e.what();
  return c;
}

CellResult train_and_evaluate(const Dataset& train_ds, const std::vector<std::size_t>& train_rows,
                              const Dataset& test_ds, const std::vector<std::size_t>& test_rows, Target target,
                              const ExperimentConfig& config, std::optional<TrainedModel>* model_out) {
  try {
    TrainedModel model = train_model(train_ds, train_rows, target, config);
    CellResult c;
    c.target = target;
    c.train_rows = train_rows.size();
    c.test_rows = test_rows.size();
    c.metrics = evaluate_model(model, test_ds, test_rows);
    if (model_out) *model_out = std::move(model);
    return c;
  } catch (const std::exception& e) {
    CellResult c = failed_cell(target, e);
    c.train_rows = train_rows.size();
    c.test_rows = test_rows.size();
    return c;
  }
}

}  // namespace

TrainedModel train_model(const Dataset& ds, std::span<const std::size_t> rows, Target target,
                         const ExperimentConfig& config) {
  const Matrix x = feature_matrix(ds, rows);
  const std::vector<double> y = target_vector(ds, rows, target);
  if (y.empty()) throw Error(Errc::TooFewRows, "no training rows");
  fit_target_scaling(y);  // throws DegenerateTarget for a constant target
  warn_if_constant_features(x);

  TrainedModel m;
  m.algorithm = config.algorithm;
  m.target = target;
  m.feature_names = ds.feature_names;
  if (config.algorithm == Algorithm::DecisionTree) {
    m.model = train_tree(x, y, config.tree);
  } else {
    NnConfig nn = config.nn;
    nn.seed = model_seed(config.seed, config.algorithm, target);
    m.model = train_nn(x, y, nn);
  }
  return m;
}

EvalMetrics evaluate_model(const TrainedModel& model, const Dataset& ds, std::span<const std::size_t> rows) {
  if (model.feature_names != ds.feature_names) {
    throw Error(Errc::SchemaMismatch, "model and dataset feature schemas differ");
  }
  std::vector<double> predicted, actual;
  predicted.reserve(rows.size());
  actual.reserve(rows.size());
  for (std::size_t r : rows) {
    predicted.push_back(predict(model, ds.rows[r].features));
    actual.push_back(ds.rows[r].target.get(model.target));
  }
  return eval_metrics(predicted, actual);
}

std::vector<CellResult> run_within_project(const ProjectData& project, const ExperimentConfig& config,
                                           std::vector<std::optional<TrainedModel>>* models_out) {
  const auto eligible = project.dataset.eligible_indices();
  if (eligible.size() < 20) {
    throw Error(Errc::TooFewRows, project.name + " has " + std::to_string(eligible.size()) +
                                      " eligible rows; within-project evaluation needs 20");
  }
  const Holdout split = random_holdout(eligible.size(), holdout_seed(config.seed, project.name));
  const auto train = map_positions(eligible, split.train);
  const auto test = map_positions(eligible, split.test);

  std::vector<CellResult> cells(kAllTargets.size());
  if (models_out) models_out->assign(kAllTargets.size(), std::nullopt);
  parallel_for(kAllTargets.size(), config.jobs, [&](std::size_t t) {
    cells[t] = train_and_evaluate(project.dataset, train, project.dataset, test, kAllTargets[t], config,
                                  models_out ? &(*models_out)[t] : nullptr);
  });
  return cells;
}

std::vector<CellResult> run_cross_validation(const ProjectData& project, std::size_t k,
                                             const ExperimentConfig& config) {
  const auto eligible = project.dataset.eligible_indices();
  const auto folds = kfold(eligible.size(), k, derive_seed(config.seed, "kfold/" + project.name));
  std::vector<CellResult> cells(k * kAllTargets.size());
  parallel_for(cells.size(), config.jobs, [&](std::size_t c) {
    const std::size_t f = c / kAllTargets.size();
    const Target target = kAllTargets[c % kAllTargets.size()];
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train.begin(), train.end());
    cells[c] = train_and_evaluate(project.dataset, map_positions(eligible, train), project.dataset,
                                  map_positions(eligible, folds[f]), target, config, nullptr);
  });
  return cells;
}

CrossProjectMatrix run_cross_project(const std::vector<ProjectData>& projects, const ExperimentConfig& config) {
  const std::size_t p = projects.size();
  const std::size_t nt = kAllTargets.size();
  CrossProjectMatrix matrix;
  for (const auto& pr : projects) matrix.projects.push_back(pr.name);
  matrix.cells.assign(nt, std::vector<std::vector<CellResult>>(p, std::vector<CellResult>(p)));

  ExperimentConfig inner = config;
  inner.jobs = 1;

  std::vector<std::vector<std::size_t>> eligible(p);
  for (std::size_t i = 0; i < p; ++i) eligible[i] = projects[i].dataset.eligible_indices();

  // Diagonal: within-project holdout.
  std::vector<std::vector<CellResult>> within(p);
  parallel_for(p, config.jobs, [&](std::size_t i) {
    try {
      within[i] = run_within_project(projects[i], inner);
    } catch (const std::exception& e) {
      for (Target t : kAllTargets) within[i].push_back(failed_cell(t, e));
    }
  });

  // Off-diagonal: one model per (train project, target) on all eligible rows.
  std::vector<std::optional<TrainedModel>> models(p * nt);
  std::vector<CellResult> model_status(p * nt);
  parallel_for(p * nt, config.jobs, [&](std::size_t task) {
    const std::size_t i = task / nt;
    const Target t = kAllTargets[task % nt];
    try {
      models[task] = train_model(projects[i].dataset, eligible[i], t, inner);
      model_status[task].target = t;
    } catch (const std::exception& e) {
      model_status[task] = failed_cell(t, e);
    }
  });

  parallel_for(nt * p * p, config.jobs, [&](std::size_t task) {
    const std::size_t t = task / (p * p);
    const std::size_t i = task / p % p;
    const std::size_t j = task % p;
    CellResult& cell = matrix.cells[t][i][j];
    if (i == j) {
      cell = within[i][t];
      return;
    }
    const std::size_t m = i * nt + t;
    cell.target = kAllTargets[t];
    cell.train_rows = eligible[i].size();
    cell.test_rows = eligible[j].size();
    if (!models[m]) {
      cell.status = model_status[m].status;
      cell.note = model_status[m].note;
      return;
    }
    try {
      cell.metrics = evaluate_model(*models[m], projects[j].dataset, eligible[j]);
    } catch (const std::exception& e) {
      const CellResult f = failed_cell(kAllTargets[t], e);
      cell.status = f.status;
      cell.note = f.note;
    }
  });
  return matrix;
}

UnifiedResult run_unified(const std::vector<ProjectData>& projects, const ExperimentConfig& config,
                          std::vector<std::optional<TrainedModel>>* models_out) {
  UnifiedResult result;
  Dataset pooled;
  std::vector<std::string> ids;
  for (const auto& pr : projects) {
    result.projects.push_back(pr.name);
    if (pooled.feature_names.empty()) pooled.feature_names = pr.dataset.feature_names;
    if (pr.dataset.feature_names != pooled.feature_names) {
      throw Error(Errc::SchemaMismatch, pr.name + " uses a different feature schema");
    }
    for (std::size_t r : pr.dataset.eligible_indices()) {
      pooled.rows.push_back(pr.dataset.rows[r]);
      ids.push_back(pr.name);
    }
  }
  const Holdout split = stratified_holdout(ids, config.seed);

  const std::size_t nt = kAllTargets.size();
  std::vector<std::optional<TrainedModel>> models(nt);
  result.pooled.resize(nt);
  parallel_for(nt, config.jobs, [&](std::size_t t) {
    result.pooled[t] =
        train_and_evaluate(pooled, split.train, pooled, split.test, kAllTargets[t], config, &models[t]);
  });

  result.per_project.assign(projects.size(), std::vector<CellResult>(nt));
  for (std::size_t p = 0; p < projects.size(); ++p) {
    std::vector<std::size_t> test;
    for (std::size_t r : split.test) {
      if (ids[r] == projects[p].name) test.push_back(r);
    }
    for (std::size_t t = 0; t < nt; ++t) {
      CellResult& cell = result.per_project[p][t];
      cell.target = kAllTargets[t];
      cell.train_rows = split.train.size();
      cell.test_rows = test.size();
      if (!models[t]) {
        cell.status = result.pooled[t].status;
        cell.note = result.pooled[t].note;
        continue;
      }
      try {
        cell.metrics = evaluate_model(*models[t], pooled, test);
      } catch (const std::exception& e) {
        const CellResult f = failed_cell(kAllTargets[t], e);
        cell.status = f.status;
        cell.note = f.note;
      }
    }
  }
  if (models_out) *models_out = std::move(models);
  return result;
}

}  // namespace churnforge
