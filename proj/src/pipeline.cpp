#include "churnforge/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "churnforge/csv.hpp"
#include "churnforge/error.hpp"
#include "churnforge/experiments.hpp"
#include "churnforge/log.hpp"
#include "churnforge/org_features.hpp"
#include "churnforge/report.hpp"
#include "churnforge/sha256.hpp"

namespace churnforge {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Within: return "within";
    case Experiment::Cross: return "cross";
    case Experiment::Unified: return "unified";
    case Experiment::All: return "all";
  }
  return "all";
}

Experiment experiment_from_string(std::string_view s) {
  if (s == "within") return Experiment::Within;
  if (s == "cross") return Experiment::Cross;
  if (s == "unified") return Experiment::Unified;
  if (s == "all") return Experiment::All;
  throw Error(Errc::ConfigInvalid, "unknown experiment '" + std::string(s) + "'");
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::ConfigInvalid, what); }

template <typename F>
auto config_value(const char* key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigInvalid) throw;
    invalid(std::string(key) + ": " + e.what());
  } catch (const nlohmann::json::exception&) {
    invalid(std::string(key) + " has the wrong type");
  } catch (const std::invalid_argument& e) {
    invalid(std::string(key) + ": " + e.what());
  }
}

// nlohmann converts negative numbers to unsigned silently.
template <typename T>
T unsigned_value(const nlohmann::json& j, const char* key) {
  if (!j.is_number_unsigned()) invalid(std::string(key) + " must be a non-negative integer");
  return j.get<T>();
}

bool file_safe(const std::string& name) {
  if (name.empty() || name.front() == '.') return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') return false;
  }
  return true;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
}

std::string model_file_name(const std::string& scope, Algorithm algo, Target t) {
  return scope + "." + std::string(to_string(algo)) + "." + std::string(to_string(t)) + ".json";
}

struct ProjectState {
  const ProjectSource* source = nullptr;
  bool ok = false;
  std::string failed_step;
  std::string error;
  std::size_t revisions = 0;
  Timestamp extraction_timestamp = 0;
  ProjectData data;
};

CellResult failed_cell(Target t, const std::string& note) {
  CellResult c;
  c.target = t;
  c.status = CellStatus::Failed;
  c.note = note;
  return c;
}

class StepLog {
 public:
  void fail(const std::string& step, const std::string& what) {
    log::error(step, what);
    std::lock_guard lock(mutex_);
    steps_.insert(step);
  }
  std::vector<std::string> steps() const { return {steps_.begin(), steps_.end()}; }

 private:
  mutable std::mutex mutex_;
  std::set<std::string> steps_;
};

void prepare_project(ProjectState& state, const RunConfig& config, const fs::path& out, StepLog& steps) {
  const std::string& name = state.source->name;
  std::string step = "ingest:" + name;
  try {
    HistoryBundle bundle;
    if (state.source->bundle) {
      bundle = load_bundle(*state.source->bundle);
    } else {
      bundle = ingest_git(*state.source->repo);
    }
    validate(bundle);
    state.revisions = bundle.revisions.size();
    state.extraction_timestamp = bundle.extraction_timestamp;

    step = "features:" + name;
    DatasetOptions options;
    options.feature_set = FeatureSet::All;
    options.horizon_seconds = config.horizon_days * kSecondsPerDay;
    write_file(out / "features" / (name + ".csv"), revision_features_csv(name, bundle, options.xml));

    step = "dataset:" + name;
    options.per_file = config.per_file;
    Dataset full = build_dataset(name, bundle, options);
    state.data.name = name;
    state.data.dataset = select_features(full, config.feature_set, options.xml);
    write_file(out / "datasets" / (name + ".csv"), dataset_csv(state.data.dataset));
    state.ok = true;
    log::info(step, name + ": " + std::to_string(state.data.dataset.rows.size()) + " rows, " +
                        std::to_string(state.data.dataset.eligible_indices().size()) + " eligible");
  } catch (const std::exception& e) {
    state.failed_step = step;
    state.error = e.what();
    steps.fail(step, e.what());
  }
}

void note_failed_cells(const std::vector<ResultRecord>& records, StepLog& steps) {
  for (const auto& r : records) {
    if (r.status != CellStatus::Failed) continue;
    steps.fail(r.experiment + ":" + r.train_project + ":" + r.test_project + ":" + std::string(to_string(r.algorithm)) +
                   ":" + std::string(to_string(r.target)),
               r.note);
  }
}

ojson config_json(const RunConfig& config) {
  ojson c;
  ojson projects = ojson::array();
  for (const auto& p : config.projects) {
    ojson e;
    e["name"] = p.name;
    e[p.bundle ? "bundle" : "repo"] = p.spelled;
    projects.push_back(std::move(e));
  }
  c["projects"] = std::move(projects);
  c["horizon_days"] = config.horizon_days;
  c["feature_set"] = to_string(config.feature_set);
  ojson algos = ojson::array();
  for (Algorithm a : config.algorithms) algos.push_back(to_string(a));
  c["algorithms"] = std::move(algos);
  c["seed"] = config.seed.value_or(0);
  c["experiment"] = to_string(config.experiment);
  c["jobs"] = config.jobs;
  c["per_file"] = config.per_file;
  return c;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) invalid("config must be a JSON object");
  static const std::set<std::string> kKeys = {"projects",   "horizon_days", "feature_set", "algorithms", "seed",
                                              "output_dir", "experiment",   "jobs",        "per_file"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) invalid("unknown config key '" + key + "'");
  }

  RunConfig c;
  if (!j.contains("projects") || !j["projects"].is_array()) invalid("projects must be a list");
  for (const auto& p : j["projects"]) {
    if (!p.is_object()) invalid("each project must be an object");
    for (const auto& [key, _] : p.items()) {
      if (key != "name" && key != "bundle" && key != "repo") invalid("unknown project key '" + key + "'");
    }
    ProjectSource src;
    src.name = config_value("projects.name", [&] { return p.at("name").get<std::string>(); });
    const bool has_bundle = p.contains("bundle");
    if (has_bundle == p.contains("repo")) invalid("project " + src.name + " needs exactly one of bundle or repo");
    src.spelled = config_value("projects.path", [&] { return p.at(has_bundle ? "bundle" : "repo").get<std::string>(); });
    const fs::path resolved = base_dir / src.spelled;
    (has_bundle ? src.bundle : src.repo) = resolved.lexically_normal();
    c.projects.push_back(std::move(src));
  }
  if (j.contains("horizon_days")) c.horizon_days = config_value("horizon_days", [&] { return j["horizon_days"].get<std::int64_t>(); });
  if (j.contains("feature_set")) {
    c.feature_set = config_value("feature_set", [&] { return feature_set_from_string(j["feature_set"].get<std::string>()); });
  }
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& a : config_value("algorithms", [&] { return j["algorithms"].get<std::vector<std::string>>(); })) {
      c.algorithms.push_back(config_value("algorithms", [&] { return algorithm_from_string(a); }));
    }
  }
  if (j.contains("seed")) c.seed = unsigned_value<std::uint64_t>(j["seed"], "seed");
  if (j.contains("output_dir")) {
    c.output_dir = (base_dir / config_value("output_dir", [&] { return j["output_dir"].get<std::string>(); })).lexically_normal();
  }
  if (j.contains("experiment")) {
    c.experiment = config_value("experiment", [&] { return experiment_from_string(j["experiment"].get<std::string>()); });
  }
  if (j.contains("jobs")) c.jobs = unsigned_value<std::size_t>(j["jobs"], "jobs");
  if (j.contains("per_file")) c.per_file = config_value("per_file", [&] { return j["per_file"].get<bool>(); });
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) invalid("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.parent_path());
}

void finalize_run_config(RunConfig& config) {
  if (!config.seed) {
    if (const char* env = std::getenv("CHURN_FORGE_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        config.seed = std::stoull(env, &used);
        if (env[used] != '\0') throw std::invalid_argument(env);
      } catch (const std::exception&) {
        invalid(std::string("CHURN_FORGE_SEED is not an unsigned integer: ") + env);
      }
    } else {
      invalid("no seed: set \"seed\" in the config, pass --seed, or export CHURN_FORGE_SEED");
    }
  }
  if (config.projects.empty()) invalid("no projects configured");
  std::set<std::string> names;
  for (const auto& p : config.projects) {
    if (!file_safe(p.name)) invalid("project name '" + p.name + "' must use only letters, digits, '-', '_' and '.'");
    if (!names.insert(p.name).second) invalid("duplicate project name '" + p.name + "'");
    const fs::path& where = p.bundle ? *p.bundle : *p.repo;
    if (!fs::exists(where)) invalid("project " + p.name + ": path does not exist: " + where.string());
  }
  if (config.algorithms.empty()) invalid("algorithms must not be empty");
  std::set<Algorithm> algos(config.algorithms.begin(), config.algorithms.end());
  if (algos.size() != config.algorithms.size()) invalid("algorithms lists a duplicate");
  if (config.horizon_days <= 0) invalid("horizon_days must be positive");
  if (config.jobs == 0) invalid("jobs must be at least 1");
}

std::string revision_features_csv(const std::string& project, const HistoryBundle& bundle,
                                  const XmlMetricOptions& xml) {
  DatasetOptions options;
  options.feature_set = FeatureSet::All;
  options.xml = xml;
  const Dataset ds = build_dataset(project, bundle, options);
  const auto org = scan_history(bundle);

  std::ostringstream out;
  std::vector<std::string> header = {"project_id", "revision_id", "timestamp"};
  header.insert(header.end(), ds.feature_names.begin(), ds.feature_names.end());
  header.push_back("active_developers_to_date");
  csv::write_row(out, header);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& r = ds.rows[i];
    std::vector<std::string> fields = {r.project_id, r.revision_id, format_iso8601(r.timestamp)};
    for (double v : r.features) fields.push_back(csv::format_number(v));
    fields.push_back(std::to_string(org[i].active_developers_to_date));
    csv::write_row(out, fields);
  }
  return out.str();
}

RunOutcome run_pipeline(const RunConfig& config) {
  const fs::path& out = config.output_dir;
  const std::uint64_t seed = config.seed.value_or(0);
  StepLog steps;
  for (const char* sub : {"features", "datasets", "models", "reports"}) fs::create_directories(out / sub);

  std::vector<ProjectState> states(config.projects.size());
  for (std::size_t i = 0; i < states.size(); ++i) states[i].source = &config.projects[i];
  parallel_for(states.size(), config.jobs, [&](std::size_t i) { prepare_project(states[i], config, out, steps); });

  std::vector<ProjectData> ready;
  for (auto& s : states) {
    if (s.ok) ready.push_back(s.data);
  }
  auto failure_note = [](const ProjectState& s) { return "project failed at " + s.failed_step + ": " + s.error; };

  const bool want_within = config.experiment == Experiment::Within || config.experiment == Experiment::All;
  const bool want_cross = config.experiment == Experiment::Cross || config.experiment == Experiment::All;
  const bool want_unified = config.experiment == Experiment::Unified || config.experiment == Experiment::All;
  std::vector<ResultRecord> within, cross, unified;

  for (Algorithm algo : config.algorithms) {
    ExperimentConfig ec;
    ec.algorithm = algo;
    ec.seed = seed;
    ec.jobs = config.jobs;
    const std::string algo_name(to_string(algo));

    if (want_within) {
      std::vector<std::vector<CellResult>> cells(states.size());
      std::vector<std::vector<std::optional<TrainedModel>>> models(states.size());
      ExperimentConfig inner = ec;
      inner.jobs = 1;
      parallel_for(states.size(), config.jobs, [&](std::size_t i) {
        const auto& s = states[i];
        if (!s.ok) {
          for (Target t : kAllTargets) cells[i].push_back(failed_cell(t, failure_note(s)));
          return;
        }
        try {
          cells[i] = run_within_project(s.data, inner, &models[i]);
        } catch (const std::exception& e) {
          cells[i].clear();
          for (Target t : kAllTargets) cells[i].push_back(failed_cell(t, e.what()));
        }
      });
      for (std::size_t i = 0; i < states.size(); ++i) {
        const auto recs = within_records(states[i].source->name, algo, config.feature_set, cells[i]);
        within.insert(within.end(), recs.begin(), recs.end());
        for (std::size_t t = 0; t < models[i].size(); ++t) {
          if (!models[i][t]) continue;
          write_file(out / "models" / model_file_name(states[i].source->name, algo, kAllTargets[t]),
                     serialise(*models[i][t]));
        }
      }
    }

    if (want_cross) {
      CrossProjectMatrix m = run_cross_project(ready, ec);
      // Re-index over every configured project so failed ones keep their rows and columns.
      CrossProjectMatrix full;
      for (const auto& s : states) full.projects.push_back(s.source->name);
      const std::size_t p = states.size();
      full.cells.assign(kAllTargets.size(), std::vector<std::vector<CellResult>>(p, std::vector<CellResult>(p)));
      std::vector<std::size_t> ready_index(p, 0);
      for (std::size_t i = 0, k = 0; i < p; ++i) {
        if (states[i].ok) ready_index[i] = k++;
      }
      for (std::size_t t = 0; t < kAllTargets.size(); ++t) {
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < p; ++j) {
            if (!states[i].ok || !states[j].ok) {
              full.cells[t][i][j] = failed_cell(kAllTargets[t], failure_note(states[states[i].ok ? j : i]));
            } else {
              full.cells[t][i][j] = m.cells[t][ready_index[i]][ready_index[j]];
            }
          }
        }
      }
      const auto recs = cross_records(full, algo, config.feature_set);
      cross.insert(cross.end(), recs.begin(), recs.end());
    }

    if (want_unified) {
      UnifiedResult u;
      std::vector<std::optional<TrainedModel>> models;
      try {
        if (ready.empty()) throw Error(Errc::TooFewRows, "no project produced a dataset");
        u = run_unified(ready, ec, &models);
      } catch (const std::exception& e) {
        u = {};
        for (Target t : kAllTargets) u.pooled.push_back(failed_cell(t, e.what()));
        for (const auto& r : ready) {
          u.projects.push_back(r.name);
          u.per_project.emplace_back();
          for (Target t : kAllTargets) u.per_project.back().push_back(failed_cell(t, e.what()));
        }
        models.clear();
      }
      UnifiedResult full;
      full.pooled = u.pooled;
      for (const auto& s : states) {
        full.projects.push_back(s.source->name);
        if (s.ok) {
          const auto it = std::find(u.projects.begin(), u.projects.end(), s.source->name);
          full.per_project.push_back(u.per_project[static_cast<std::size_t>(it - u.projects.begin())]);
        } else {
          full.per_project.emplace_back();
          for (Target t : kAllTargets) full.per_project.back().push_back(failed_cell(t, failure_note(s)));
        }
      }
      const auto recs = unified_records(full, algo, config.feature_set);
      unified.insert(unified.end(), recs.begin(), recs.end());
      for (std::size_t t = 0; t < models.size(); ++t) {
        if (models[t]) write_file(out / "models" / model_file_name("unified", algo, kAllTargets[t]), serialise(*models[t]));
      }
    }
  }

  const std::pair<const char*, const std::vector<ResultRecord>*> reports[] = {
      {"within", &within}, {"cross", &cross}, {"unified", &unified}};
  const bool wanted[] = {want_within, want_cross, want_unified};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!wanted[k]) continue;
    const auto& [name, recs] = reports[k];
    note_failed_cells(*recs, steps);
    write_file(out / "reports" / (std::string(name) + ".csv"), results_csv(*recs));
    write_file(out / "reports" / (std::string(name) + ".md"), experiment_markdown(name, *recs));
  }

  RunOutcome outcome;
  outcome.failed_steps = steps.steps();
  outcome.exit_code = outcome.failed_steps.empty() ? 0 : 1;

  ojson manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["created"] = format_iso8601(now_utc());
  manifest["config"] = config_json(config);
  ojson seeds;
  seeds["base"] = seed;
  ojson holdout;
  for (const auto& p : config.projects) holdout[p.name] = holdout_seed(seed, p.name);
  seeds["holdout"] = std::move(holdout);
  ojson model;
  for (Algorithm a : config.algorithms) {
    for (Target t : kAllTargets) model[std::string(to_string(a)) + "/" + std::string(to_string(t))] = model_seed(seed, a, t);
  }
  seeds["model"] = std::move(model);
  manifest["seeds"] = std::move(seeds);
  ojson projects = ojson::array();
  for (const auto& s : states) {
    ojson p;
    p["name"] = s.source->name;
    p["status"] = s.ok ? "ok" : "failed";
    if (s.ok) {
      p["revisions"] = s.revisions;
      p["extraction_timestamp"] = format_iso8601(s.extraction_timestamp);
      p["rows"] = s.data.dataset.rows.size();
      p["eligible_rows"] = s.data.dataset.eligible_indices().size();
    } else {
      p["failed_step"] = s.failed_step;
      p["error"] = s.error;
    }
    projects.push_back(std::move(p));
  }
  manifest["projects"] = std::move(projects);
  manifest["failed_steps"] = outcome.failed_steps;
  ojson artifacts = ojson::array();
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (entry.is_regular_file() && entry.path().filename() != "run-manifest.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream data;
    data << in.rdbuf();
    ojson a;
    a["path"] = fs::relative(f, out).generic_string();
    a["sha256"] = sha256_hex(data.str());
    artifacts.push_back(std::move(a));
  }
  manifest["artifacts"] = std::move(artifacts);
  write_file(out / "run-manifest.json", manifest.dump(2) + "\n");

  if (outcome.exit_code == 0) {
    log::info("run", "finished; artifacts in " + out.string());
  } else {
    log::error("run", std::to_string(outcome.failed_steps.size()) + " step(s) failed; artifacts in " + out.string());
  }
  return outcome;
}

}  // namespace churnforge
