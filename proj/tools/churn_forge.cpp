// Command-line front end: one subcommand per pipeline stage plus `run`,
// which executes the whole pipeline from a JSON config.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "churnforge/churn.hpp"
#include "churnforge/csv.hpp"
#include "churnforge/error.hpp"
#include "churnforge/experiments.hpp"
#include "churnforge/log.hpp"
#include "churnforge/pipeline.hpp"
#include "churnforge/report.hpp"
#include "churnforge/synth.hpp"

namespace fs = std::filesystem;
using namespace churnforge;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// "-" or empty means stdout.
void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  RunConfig probe;
  probe.seed = flag;
  probe.projects.push_back({"probe", fs::path("."), std::nullopt, "."});
  finalize_run_config(probe);
  return *probe.seed;
}

std::vector<Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<Algorithm> out;
  for (const auto& n : names) {
    try {
      out.push_back(algorithm_from_string(n));
    } catch (const Error& e) {
      throw Error(Errc::ConfigInvalid, e.what());
    }
  }
  return out;
}

ProjectData load_dataset(const std::string& path) {
  ProjectData p;
  p.dataset = parse_dataset_csv(read_text(path));
  p.name = p.dataset.rows.empty() || p.dataset.rows.front().project_id.empty() ? fs::path(path).stem().string()
                                                                                 : p.dataset.rows.front().project_id;
  return p;
}

std::string project_name_or_dir(const std::string& name, const std::string& bundle) {
  return name.empty() ? fs::path(bundle).lexically_normal().filename().string() : name;
}

struct ExperimentFlags {
  std::vector<std::string> datasets;
  std::vector<std::string> algorithms = {"dt", "nn"};
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out_dir = ".";

  void attach(CLI::App* app) {
    app->add_option("--dataset", datasets, "Dataset CSV (repeatable; one project per file)")->required();
    app->add_option("--algorithms", algorithms, "Learners to run (dt, nn)")->delimiter(',');
    app->add_option("--seed", seed, "Seed (falls back to CHURN_FORGE_SEED)");
    app->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
    app->add_option("--out-dir", out_dir, "Directory for the CSV and Markdown reports");
  }

  std::vector<ProjectData> load() const {
    std::vector<ProjectData> projects;
    for (const auto& d : datasets) projects.push_back(load_dataset(d));
    return projects;
  }

  FeatureSet feature_set_of(const std::vector<ProjectData>& projects) const {
    if (projects.empty()) return FeatureSet::All;
    const auto& names = projects.front().dataset.feature_names;
    for (FeatureSet fs : {FeatureSet::Org, FeatureSet::Code, FeatureSet::All}) {
      if (feature_names(fs) == names) return fs;
    }
    return FeatureSet::All;
  }

  ExperimentConfig config(Algorithm algo) const {
    ExperimentConfig c;
    c.algorithm = algo;
    c.seed = resolve_seed(seed);
    c.jobs = jobs;
    return c;
  }

  void write(const std::string& experiment, const std::vector<ResultRecord>& records) const {
    write_output((fs::path(out_dir) / (experiment + ".csv")).string(), results_csv(records));
    write_output((fs::path(out_dir) / (experiment + ".md")).string(), experiment_markdown(experiment, records));
  }
};

int exit_code_for(const Error& e) { return e.code() == Errc::ConfigInvalid ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine version-control history for churn prediction: features, datasets, models, evaluation."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Capture a git repository's first-parent history as a bundle");
  std::string repo, bundle_out, extraction;
  ingest->add_option("--repo", repo, "Repository path")->required();
  ingest->add_option("--out", bundle_out, "Bundle directory to write")->required();
  ingest->add_option("--extracted-at", extraction, "ISO-8601 extraction timestamp (default: now)");

  // churn
  auto* churn = app.add_subcommand("churn", "Per-file added/modified/deleted lines for every revision");
  std::string bundle, out = "-";
  bool totals_only = false;
  churn->add_option("--bundle", bundle, "Bundle directory")->required();
  churn->add_option("--out", out, "Output CSV (default stdout)");
  churn->add_flag("--totals-only", totals_only, "Only the per-revision total rows");

  // features
  auto* features = app.add_subcommand("features", "Organisational and code features per revision");
  std::string project;
  features->add_option("--bundle", bundle, "Bundle directory")->required();
  features->add_option("--project", project, "Project name (default: bundle directory name)");
  features->add_option("--out", out, "Output CSV (default stdout)");

  // xml-metrics
  auto* xml = app.add_subcommand("xml-metrics", "The 61 XML/XSLT metrics of individual files");
  std::vector<std::string> xml_files;
  xml->add_option("files", xml_files, "XML or XSLT files")->required()->check(CLI::ExistingFile);
  xml->add_option("--out", out, "Output CSV (default stdout)");

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Feature rows with one-year-forward churn targets");
  std::string feature_set = "org";
  std::int64_t horizon_days = 365;
  bool per_file = false;
  dataset->add_option("--bundle", bundle, "Bundle directory")->required();
  dataset->add_option("--project", project, "Project name (default: bundle directory name)");
  dataset->add_option("--features,--feature-set", feature_set, "org, code or all")->check(CLI::IsMember({"org", "code", "all"}));
  dataset->add_option("--horizon-days", horizon_days, "Target window length")->check(CLI::PositiveNumber);
  dataset->add_flag("--per-file", per_file, "One row per changed file");
  dataset->add_option("--out", out, "Output CSV (default stdout)");

  // train
  auto* train = app.add_subcommand("train", "Train one model on every eligible row of a dataset");
  std::string dataset_path, algorithm = "dt", target = "added", model_path;
  std::optional<std::uint64_t> seed;
  train->add_option("--dataset", dataset_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--algo,--algorithm", algorithm, "dt or nn")->check(CLI::IsMember({"dt", "nn"}));
  train->add_option("--target", target, "added, modified or deleted")
      ->check(CLI::IsMember({"added", "modified", "deleted", "removed"}));
  train->add_option("--seed", seed, "Seed (falls back to CHURN_FORGE_SEED)");
  train->add_option("--out", model_path, "Model JSON")->required();

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a saved model (--model) or run 70/30 within-project experiments on datasets");
  ExperimentFlags eval_flags;
  eval_flags.attach(evaluate);
  evaluate->add_option("--model", model_path, "Score this model on the dataset's eligible rows");
  evaluate->add_option("--out", out, "Output CSV for --model scoring (default stdout)");

  auto* cross = app.add_subcommand("cross-eval", "Cross-project matrix: train on each project, test on every other");
  ExperimentFlags cross_flags;
  cross_flags.attach(cross);

  auto* unified = app.add_subcommand("unified", "One pooled model per target with per-project breakdown");
  ExperimentFlags unified_flags;
  unified_flags.attach(unified);

  // run
  auto* run = app.add_subcommand("run", "Execute the whole pipeline from a JSON config");
  std::string config_path, experiment, output_dir;
  std::vector<std::string> algorithms;
  std::optional<std::size_t> jobs;
  std::optional<std::int64_t> run_horizon;
  std::string run_feature_set;
  run->add_option("--config", config_path, "Run config (JSON)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--jobs", jobs, "Override the worker count")->check(CLI::PositiveNumber);
  run->add_option("--output", output_dir, "Override the output directory");
  run->add_option("--experiment", experiment, "within, cross, unified or all")
      ->check(CLI::IsMember({"within", "cross", "unified", "all"}));
  run->add_option("--feature-set", run_feature_set, "org, code or all")->check(CLI::IsMember({"org", "code", "all"}));
  run->add_option("--algorithms", algorithms, "Override the learners (dt, nn)")->delimiter(',');
  run->add_option("--horizon-days", run_horizon, "Override the target window")->check(CLI::PositiveNumber);
  auto* run_per_file = run->add_flag("--per-file", per_file, "Per-file dataset rows");

  // report
  auto* report = app.add_subcommand("report", "Mean/median summary table (DT/NN x Added/Removed/Modified)");
  std::string results_path, format = "md", only_experiment;
  report->add_option("results", results_path, "Results CSV written by evaluate, cross-eval, unified or run")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--experiment", only_experiment, "Only summarise this experiment")
      ->check(CLI::IsMember({"within", "cross", "unified"}));
  report->add_option("--format", format, "md or csv")->check(CLI::IsMember({"md", "csv"}));
  report->add_option("--out", out, "Output file (default stdout)");

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "Write the three-project fixture corpus and a demo config");
  std::string corpus_dir;
  synth->add_option("--out", corpus_dir, "Corpus directory")->required();
  synth->add_option("--seed", seed, "Generator seed (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  log::set_min_level(log_level == "debug"  ? log::Level::Debug
                     : log_level == "warn" ? log::Level::Warn
                     : log_level == "error" ? log::Level::Error
                                            : log::Level::Info);

  try {
    if (*ingest) {
      GitIngestOptions options;
      if (!extraction.empty()) options.extraction_timestamp = parse_iso8601(extraction);
      const HistoryBundle b = ingest_git(repo, options);
      save_bundle(b, bundle_out);
      log::info("ingest", std::to_string(b.revisions.size()) + " revisions written to " + bundle_out);
    } else if (*churn) {
      // Per-file rows are followed by one total row per revision with an empty path.
      const HistoryBundle b = load_bundle(bundle);
      std::ostringstream s;
      csv::write_row(s, {"revision_id", "path", "added", "modified", "deleted"});
      for (const auto& rc : churn_of_history(b)) {
        if (!totals_only) {
          for (const auto& f : rc.per_file) {
            csv::write_row(s, {rc.revision_id, f.path, std::to_string(f.churn.added),
                               std::to_string(f.churn.modified), std::to_string(f.churn.deleted)});
          }
        }
        csv::write_row(s, {rc.revision_id, "", std::to_string(rc.totals.added), std::to_string(rc.totals.modified),
                           std::to_string(rc.totals.deleted)});
      }
      write_output(out, s.str());
    } else if (*features) {
      const HistoryBundle b = load_bundle(bundle);
      write_output(out, revision_features_csv(project_name_or_dir(project, bundle), b));
    } else if (*xml) {
      std::ostringstream s;
      std::vector<std::string> header = {"path"};
      for (const auto& n : code_feature_names()) header.push_back(n);
      csv::write_row(s, header);
      bool failed = false;
      for (const auto& f : xml_files) {
        try {
          std::vector<std::string> row = {f};
          for (double v : extract_file(read_text(f)).values()) row.push_back(csv::format_number(v));
          csv::write_row(s, row);
        } catch (const Error& e) {
          log::error("xml-metrics", f + ": " + e.what());
          failed = true;
        }
      }
      write_output(out, s.str());
      return failed ? 1 : 0;
    } else if (*dataset) {
      const HistoryBundle b = load_bundle(bundle);
      DatasetOptions options;
      options.feature_set = feature_set_from_string(feature_set);
      options.horizon_seconds = horizon_days * kSecondsPerDay;
      options.per_file = per_file;
      write_output(out, dataset_csv(build_dataset(project_name_or_dir(project, bundle), b, options)));
    } else if (*train) {
      const ProjectData p = load_dataset(dataset_path);
      ExperimentConfig c;
      c.algorithm = algorithm_from_string(algorithm);
      c.seed = resolve_seed(seed);
      const TrainedModel m = train_model(p.dataset, p.dataset.eligible_indices(), target_from_string(target), c);
      write_output(model_path, serialise(m));
      log::info("train", "model written to " + model_path);
    } else if (*evaluate && !model_path.empty()) {
      const TrainedModel m = deserialise(read_text(model_path));
      std::vector<ResultRecord> records;
      for (const auto& d : eval_flags.datasets) {
        const ProjectData p = load_dataset(d);
        CellResult c;
        c.target = m.target;
        const auto rows = p.dataset.eligible_indices();
        c.test_rows = rows.size();
        c.metrics = evaluate_model(m, p.dataset, rows);
        ResultRecord r = within_records(p.name, m.algorithm, eval_flags.feature_set_of({p}), {c}).front();
        r.experiment = "score";
        r.train_project = "(model)";
        records.push_back(std::move(r));
      }
      write_output(out, results_csv(records));
    } else if (*evaluate) {
      const auto projects = eval_flags.load();
      std::vector<ResultRecord> records;
      for (Algorithm a : parse_algorithms(eval_flags.algorithms)) {
        ExperimentConfig c = eval_flags.config(a);
        for (const auto& p : projects) {
          std::vector<CellResult> cells;
          try {
            cells = run_within_project(p, c);
          } catch (const Error& e) {
            for (Target t : kAllTargets) cells.push_back({t, CellStatus::Failed, {}, e.what(), 0, 0});
          }
          const auto recs = within_records(p.name, a, eval_flags.feature_set_of(projects), cells);
          records.insert(records.end(), recs.begin(), recs.end());
        }
      }
      eval_flags.write("within", records);
    } else if (*cross) {
      const auto projects = cross_flags.load();
      std::vector<ResultRecord> records;
      for (Algorithm a : parse_algorithms(cross_flags.algorithms)) {
        const auto recs = cross_records(run_cross_project(projects, cross_flags.config(a)), a,
                                        cross_flags.feature_set_of(projects));
        records.insert(records.end(), recs.begin(), recs.end());
      }
      cross_flags.write("cross", records);
    } else if (*unified) {
      const auto projects = unified_flags.load();
      std::vector<ResultRecord> records;
      for (Algorithm a : parse_algorithms(unified_flags.algorithms)) {
        const auto recs = unified_records(run_unified(projects, unified_flags.config(a)), a,
                                          unified_flags.feature_set_of(projects));
        records.insert(records.end(), recs.begin(), recs.end());
      }
      unified_flags.write("unified", records);
    } else if (*run) {
      RunConfig config = load_run_config(config_path);
      if (seed) config.seed = seed;
      if (jobs) config.jobs = *jobs;
      if (!output_dir.empty()) config.output_dir = output_dir;
      if (!experiment.empty()) config.experiment = experiment_from_string(experiment);
      if (!run_feature_set.empty()) config.feature_set = feature_set_from_string(run_feature_set);
      if (!algorithms.empty()) config.algorithms = parse_algorithms(algorithms);
      if (run_horizon) config.horizon_days = *run_horizon;
      if (run_per_file->count() > 0) config.per_file = per_file;
      finalize_run_config(config);
      const RunOutcome outcome = run_pipeline(config);
      for (const auto& step : outcome.failed_steps) log::error("run", "StepFailed: " + step);
      return outcome.exit_code;
    } else if (*report) {
      auto records = parse_results_csv(read_text(results_path));
      if (!only_experiment.empty()) {
        std::erase_if(records, [&](const ResultRecord& r) { return r.experiment != only_experiment; });
      }
      const auto rows = summarise(records);
      write_output(out, format == "csv" ? summary_csv(rows)
                                        : summary_markdown(rows, "Mean and median correlations and normalised MAE "
                                                                 "and RMSD."));
    } else if (*synth) {
      const std::uint64_t base = seed.value_or(1);
      const fs::path dir(corpus_dir);
      struct Fixture {
        const char* name;
        double trend;
        bool additions_only;
      };
      const Fixture fixtures[] = {{"alpha", 1.0, false}, {"beta", -1.0, false}, {"gamma", 1.0, true}};
      nlohmann::ordered_json config;
      config["projects"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < std::size(fixtures); ++i) {
        SynthHistoryOptions o;
        o.project = fixtures[i].name;
        o.seed = base + i;
        o.trend = fixtures[i].trend;
        o.additions_only = fixtures[i].additions_only;
        save_bundle(synth_history(o), dir / fixtures[i].name);
        config["projects"].push_back({{"name", fixtures[i].name}, {"bundle", fixtures[i].name}});
      }
      config["horizon_days"] = 365;
      config["feature_set"] = "org";
      config["algorithms"] = {"dt", "nn"};
      config["seed"] = 42;
      config["output_dir"] = "out";
      config["experiment"] = "all";
      config["jobs"] = 4;
      write_output((dir / "demo.json").string(), config.dump(2) + "\n");
      log::info("synth-corpus", "corpus written to " + dir.string());
    }
  } catch (const Error& e) {
    log::error(app.get_subcommands().empty() ? "cli" : app.get_subcommands().front()->get_name(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log::error("cli", e.what());
    return 1;
  }
  return 0;
}
