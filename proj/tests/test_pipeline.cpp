#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "churnforge/csv.hpp"
#include "churnforge/pipeline.hpp"
#include "churnforge/report.hpp"
#include "churnforge/synth.hpp"
#include "helpers.hpp"

using namespace churnforge;
using testing_support::error_code_of;
using testing_support::read_file;
using testing_support::TempDir;
using testing_support::write_file;

namespace fs = std::filesystem;

namespace {

void write_synth_bundle(const fs::path& dir, const std::string& name, std::uint64_t seed, double trend) {
  SynthHistoryOptions o;
  o.project = name;
  o.seed = seed;
  o.trend = trend;
  o.revisions = 120;
  save_bundle(synth_history(o), dir);
}

// Every file under `root` except the manifest, keyed by relative path.
std::map<std::string, std::string> artifact_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "run-manifest.json") continue;
    out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return out;
}

ResultRecord record(Algorithm algo, Target t, double pearson, CellStatus status = CellStatus::Ok,
                    std::string test_project = "p") {
  ResultRecord r;
  r.experiment = "within";
  r.algorithm = algo;
  r.target = t;
  r.train_project = "p";
  r.test_project = std::move(test_project);
  r.status = status;
  r.metrics.pearson = pearson;
  r.metrics.kendall = pearson / 2;
  r.metrics.nmae = 1 - pearson;
  r.metrics.nrmsd = 0.25;
  return r;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config parsing resolves paths and rejects bad input") {
    TempDir tmp("config");
    fs::create_directories(tmp.path() / "b1");
    const auto c = parse_run_config(R"({"projects":[{"name":"x","bundle":"b1"}],"seed":3,"jobs":2,
                                       "algorithms":["nn"],"experiment":"cross","feature_set":"all"})",
                                    tmp.path());
    REQUIRE(c.projects.size() == 1);
    CHECK(*c.projects[0].bundle == (tmp.path() / "b1").lexically_normal());
    CHECK(c.projects[0].spelled == "b1");
    CHECK(c.seed == 3u);
    CHECK(c.jobs == 2);
    CHECK(c.algorithms == std::vector<Algorithm>{Algorithm::NeuralNetwork});
    CHECK(c.experiment == Experiment::Cross);
    CHECK(c.feature_set == FeatureSet::All);
    CHECK(c.horizon_days == 365);

    auto invalid = [&](const std::string& text) {
      return error_code_of([&] {
        auto cfg = parse_run_config(text, tmp.path());
        finalize_run_config(cfg);
      });
    };
    CHECK(invalid("{") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[],"seed":1})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1"}],"seed":1,"colour":"red"})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1"},{"name":"x","bundle":"b1"}],"seed":1})") ==
          Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"missing"}],"seed":1})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1","repo":"b1"}],"seed":1})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"a/b","bundle":"b1"}],"seed":1})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1"}],"seed":1,"algorithms":["svm"]})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1"}],"seed":1,"algorithms":["dt","dt"]})") ==
          Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1"}],"seed":1,"horizon_days":0})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1"}],"seed":1,"jobs":0})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1"}],"seed":-1})") == Errc::ConfigInvalid);
    CHECK(invalid(R"({"projects":[{"name":"x","bundle":"b1"}],"seed":1,"feature_set":"some"})") ==
          Errc::ConfigInvalid);
  }

  TEST_CASE("seed falls back to the environment") {
    TempDir tmp("seedenv");
    fs::create_directories(tmp.path() / "b");
    auto c = parse_run_config(R"({"projects":[{"name":"x","bundle":"b"}]})", tmp.path());
    ::unsetenv("CHURN_FORGE_SEED");
    CHECK(error_code_of([&] { auto copy = c; finalize_run_config(copy); }) == Errc::ConfigInvalid);
    ::setenv("CHURN_FORGE_SEED", "77", 1);
    finalize_run_config(c);
    CHECK(c.seed == 77u);
    ::setenv("CHURN_FORGE_SEED", "7x", 1);
    auto d = parse_run_config(R"({"projects":[{"name":"x","bundle":"b"}]})", tmp.path());
    CHECK(error_code_of([&] { finalize_run_config(d); }) == Errc::ConfigInvalid);
    ::unsetenv("CHURN_FORGE_SEED");
  }

  TEST_CASE("full run writes the artifact tree deterministically") {
    TempDir tmp("run");
    write_synth_bundle(tmp.path() / "alpha", "alpha", 1, 1.0);
    write_synth_bundle(tmp.path() / "beta", "beta", 2, -1.0);
    const std::string text = R"({"projects":[{"name":"alpha","bundle":"alpha"},{"name":"beta","bundle":"beta"}],
                                 "seed":42,"algorithms":["dt","nn"]})";
    std::map<std::string, std::string> first;
    for (std::size_t jobs : {1u, 3u}) {
      auto c = parse_run_config(text, tmp.path());
      c.jobs = jobs;
      c.output_dir = tmp.path() / ("out" + std::to_string(jobs));
      finalize_run_config(c);
      const auto outcome = run_pipeline(c);
      CHECK(outcome.exit_code == 0);
      CHECK(outcome.failed_steps.empty());
      const auto tree = artifact_tree(c.output_dir);
      for (const char* f : {"features/alpha.csv", "datasets/beta.csv", "reports/within.csv", "reports/cross.md",
                            "reports/unified.csv", "models/alpha.dt.added.json", "models/unified.nn.deleted.json"}) {
        CAPTURE(f);
        CHECK(tree.count(f) == 1);
      }
      const auto manifest = nlohmann::json::parse(read_file(c.output_dir / "run-manifest.json"));
      CHECK(manifest["seeds"]["base"] == 42);
      CHECK(manifest["projects"].size() == 2);
      CHECK(manifest["artifacts"].size() == tree.size());
      if (first.empty()) {
        first = tree;
      } else {
        CHECK(tree == first);
      }
    }
    const auto within = parse_results_csv(first.at("reports/within.csv"));
    CHECK(within.size() == 2 * 2 * 3);
    const auto cross = parse_results_csv(first.at("reports/cross.csv"));
    CHECK(cross.size() == 2 * 3 * 4);
  }

  TEST_CASE("a broken project fails only its own cells") {
    TempDir tmp("partial");
    write_synth_bundle(tmp.path() / "good", "good", 3, 1.0);
    fs::create_directories(tmp.path() / "bad");
    write_file(tmp.path() / "bad" / "manifest.jsonl", "{not json\n");
    auto c = parse_run_config(R"({"projects":[{"name":"good","bundle":"good"},{"name":"bad","bundle":"bad"}],
                                 "seed":1,"algorithms":["dt"],"experiment":"within"})",
                              tmp.path());
    c.output_dir = tmp.path() / "out";
    finalize_run_config(c);
    const auto outcome = run_pipeline(c);
    CHECK(outcome.exit_code == 1);
    CHECK_FALSE(outcome.failed_steps.empty());
    const auto records = parse_results_csv(read_file(c.output_dir / "reports" / "within.csv"));
    REQUIRE(records.size() == 6);
    for (const auto& r : records) {
      if (r.train_project == "good") {
        CHECK(r.status == CellStatus::Ok);
      } else {
        CHECK(r.status == CellStatus::Failed);
        CHECK_FALSE(r.note.empty());
      }
    }
    const auto manifest = nlohmann::json::parse(read_file(c.output_dir / "run-manifest.json"));
    CHECK(manifest["projects"][1]["status"] == "failed");
    CHECK_FALSE(fs::exists(c.output_dir / "reports" / "cross.csv"));
  }

  TEST_CASE("revision feature table") {
    SynthHistoryOptions o;
    o.revisions = 20;
    const auto bundle = synth_history(o);
    const auto table = csv::parse(revision_features_csv("s", bundle));
    REQUIRE(table.rows.size() == 20);
    CHECK(table.header.size() == 3 + 74 + 1);
    CHECK(table.header.back() == "active_developers_to_date");
    CHECK(table.rows[0][0] == "s");
  }
}

TEST_SUITE("report") {
  TEST_CASE("summary rows, mean, median and exclusions") {
    std::vector<ResultRecord> recs = {
        record(Algorithm::DecisionTree, Target::Added, 0.9),
        record(Algorithm::DecisionTree, Target::Added, 0.5),
        record(Algorithm::DecisionTree, Target::Added, 0.6),
        record(Algorithm::DecisionTree, Target::Added, 0.0, CellStatus::Skipped),
        record(Algorithm::NeuralNetwork, Target::Modified, 0.3, CellStatus::Failed),
    };
    auto undefined = record(Algorithm::DecisionTree, Target::Added, 0.0);
    undefined.metrics.pearson_undefined = true;
    recs.push_back(undefined);
    auto pooled = record(Algorithm::DecisionTree, Target::Added, -1.0, CellStatus::Ok, std::string(kPooledScope));
    pooled.experiment = "unified";
    recs.push_back(pooled);

    const auto rows = summarise(recs);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].algorithm == Algorithm::DecisionTree);
    CHECK(rows[0].target == Target::Added);
    CHECK(rows[1].target == Target::Deleted);
    CHECK(rows[2].target == Target::Modified);
    CHECK(rows[3].algorithm == Algorithm::NeuralNetwork);
    CHECK(rows[0].cells == 4);
    CHECK(rows[0].skipped == 1);
    CHECK(rows[0].measures[0].count == 3);
    CHECK(rows[0].measures[0].mean == doctest::Approx(2.0 / 3));
    CHECK(rows[0].measures[0].median == doctest::Approx(0.6));
    CHECK(rows[0].measures[1].count == 4);
    CHECK(rows[5].skipped == 1);
    CHECK(rows[5].measures[0].count == 0);

    const auto md = summary_markdown(rows, "Caption text.");
    CHECK(md.find("| DT | Added |") != std::string::npos);
    CHECK(md.find("|    | Removed |") != std::string::npos);
    CHECK(md.find("| NN | Added |") != std::string::npos);
    CHECK(md.find("0.6667 | 0.6000 |") != std::string::npos);
    CHECK(md.find("modified = min(a, b)") != std::string::npos);
    CHECK(md.find("n/a") != std::string::npos);
    CHECK(md.find("Caption text.") != std::string::npos);

    const auto table = csv::parse(summary_csv(rows));
    REQUIRE(table.rows.size() == 6);
    CHECK(table.header.size() == 12);
    CHECK(table.rows[0][0] == "DT");
    CHECK(table.rows[0][1] == "Added");
  }

  TEST_CASE("results CSV round trip") {
    std::vector<ResultRecord> recs = {record(Algorithm::DecisionTree, Target::Added, 0.123456789),
                                      record(Algorithm::NeuralNetwork, Target::Deleted, 0, CellStatus::Skipped)};
    recs[1].note = "constant target, \"quoted\", with commas";
    recs[1].metrics.nmae_undefined = true;
    recs[0].train_rows = 70;
    recs[0].test_rows = 30;
    recs[0].feature_set = FeatureSet::All;
    const auto back = parse_results_csv(results_csv(recs));
    REQUIRE(back.size() == 2);
    CHECK(back[0].metrics.pearson == recs[0].metrics.pearson);
    CHECK(back[0].train_rows == 70);
    CHECK(back[0].feature_set == FeatureSet::All);
    CHECK(back[1].status == CellStatus::Skipped);
    CHECK(back[1].note == recs[1].note);
    CHECK(back[1].metrics.nmae_undefined);
    CHECK(results_csv(back) == results_csv(recs));
    CHECK(error_code_of([] { parse_results_csv("a,b\n1,2\n"); }) == Errc::MalformedCsv);
  }
}
