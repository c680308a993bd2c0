#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "churnforge/experiments.hpp"
#include "churnforge/synth.hpp"
#include "helpers.hpp"

using namespace churnforge;
using testing_support::BundleBuilder;
using testing_support::error_code_of;

namespace {

ProjectData planted(const std::string& name, std::uint64_t seed, double sign, std::uint64_t history_seed,
                    std::size_t rows = 400) {
  PlantedOptions o;
  o.project = name;
  o.seed = seed;
  o.sign = sign;
  o.history_seed = history_seed;
  o.rows = rows;
  return {name, planted_dataset(o)};
}

ExperimentConfig config(Algorithm algo, std::uint64_t seed = 42, std::size_t jobs = 1) {
  ExperimentConfig c;
  c.algorithm = algo;
  c.seed = seed;
  c.jobs = jobs;
  return c;
}

bool same_cell(const CellResult& a, const CellResult& b) {
  return a.status == b.status && a.train_rows == b.train_rows && a.test_rows == b.test_rows &&
         a.metrics.pearson == b.metrics.pearson && a.metrics.kendall == b.metrics.kendall &&
         a.metrics.mae == b.metrics.mae && a.metrics.rmsd == b.metrics.rmsd;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("within-project holdout on a planted project") {
    const auto p = planted("p", 5, 1.0, 0);
    std::vector<std::optional<TrainedModel>> models;
    const auto cells = run_within_project(p, config(Algorithm::DecisionTree), &models);
    REQUIRE(cells.size() == 3);
    REQUIRE(models.size() == 3);
    for (const auto& c : cells) {
      CHECK(c.status == CellStatus::Ok);
      CHECK(c.train_rows == 280);
      CHECK(c.test_rows == 120);
      CHECK(c.metrics.pearson >= 0.9);
    }
    for (const auto& m : models) CHECK(m.has_value());
  }

  TEST_CASE("projects without modifications or removals only get an added model") {
    SynthHistoryOptions o;
    o.project = "additions";
    o.seed = 3;
    o.revisions = 200;
    o.additions_only = true;
    const auto bundle = synth_history(o);
    const ProjectData p{"additions", build_dataset("additions", bundle, {.feature_set = FeatureSet::Org})};
    const auto cells = run_within_project(p, config(Algorithm::DecisionTree));
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].target == Target::Added);
    CHECK(cells[0].status == CellStatus::Ok);
    for (std::size_t i = 1; i < 3; ++i) {
      CHECK(cells[i].status == CellStatus::Skipped);
      CHECK_FALSE(cells[i].note.empty());
      CHECK(std::isfinite(cells[i].metrics.pearson));
    }
  }

  TEST_CASE("all-constant code features still train") {
    BundleBuilder b;
    for (int i = 0; i < 80; ++i) {
      std::string body;
      for (int k = 0; k <= i % 7; ++k) body += "line " + std::to_string(k * i) + "\n";
      b.commit(i % 2 ? "a" : "b", 1'000'000'000 + i * 20 * 86400, {{"src/f" + std::to_string(i % 5) + ".java", body}});
    }
    const auto bundle = b.build(1'000'000'000 + 80 * 20 * 86400 + 400 * 86400);
    const ProjectData p{"nocode", build_dataset("nocode", bundle, {.feature_set = FeatureSet::Code})};
    const auto cells = run_within_project(p, config(Algorithm::DecisionTree));
    CHECK(cells[0].status == CellStatus::Ok);
  }

  TEST_CASE("too few eligible rows") {
    const auto p = planted("tiny", 1, 1.0, 0, 15);
    CHECK(error_code_of([&] { run_within_project(p, config(Algorithm::DecisionTree)); }) == Errc::TooFewRows);
  }

  TEST_CASE("evaluation refuses a foreign schema") {
    const auto p = planted("p", 5, 1.0, 0);
    std::vector<std::size_t> rows(p.dataset.rows.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto model = train_model(p.dataset, rows, Target::Added, config(Algorithm::DecisionTree));
    Dataset other = p.dataset;
    other.feature_names[0] = "renamed";
    CHECK(error_code_of([&] { evaluate_model(model, other, rows); }) == Errc::SchemaMismatch);
  }

  TEST_CASE("cross-validation folds") {
    const auto p = planted("p", 5, 1.0, 0, 301);
    const auto cells = run_cross_validation(p, 3, config(Algorithm::DecisionTree));
    REQUIRE(cells.size() == 9);
    std::size_t test_total = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      CHECK(cells[i].target == kAllTargets[i % 3]);
      CHECK(cells[i].train_rows + cells[i].test_rows == 301);
      if (i % 3 == 0) test_total += cells[i].test_rows;
    }
    CHECK(test_total == 301);
  }

  TEST_CASE("cross-project matrix shape, twins and determinism") {
    const std::vector<ProjectData> projects = {planted("a", 1, 1.0, 0), planted("b", 2, 1.0, 0),
                                               planted("c", 3, 1.0, 0)};
    const auto m = run_cross_project(projects, config(Algorithm::DecisionTree, 7, 1));
    REQUIRE(m.projects.size() == 3);
    REQUIRE(m.cells.size() == 3);
    for (Target t : kAllTargets) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          const auto& cell = m.at(t, i, j);
          CHECK(cell.target == t);
          CHECK(cell.status == CellStatus::Ok);
          if (i != j) {
            CHECK(cell.metrics.pearson >= 0.8);
            CHECK(cell.train_rows == 400);
            CHECK(cell.test_rows == 400);
          } else {
            CHECK(cell.test_rows == 120);
          }
        }
      }
    }
    const auto parallel = run_cross_project(projects, config(Algorithm::DecisionTree, 7, 4));
    for (Target t : kAllTargets) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) CHECK(same_cell(m.at(t, i, j), parallel.at(t, i, j)));
      }
    }
  }

  TEST_CASE("a failing project only fails its own cells") {
    std::vector<ProjectData> projects = {planted("good", 1, 1.0, 0), planted("bad", 2, 1.0, 0)};
    projects[1].dataset.rows.resize(5);
    const auto m = run_cross_project(projects, config(Algorithm::DecisionTree));
    for (Target t : kAllTargets) {
      CHECK(m.at(t, 0, 0).status == CellStatus::Ok);
      CHECK(m.at(t, 1, 1).status != CellStatus::Ok);
      CHECK(m.at(t, 1, 0).status != CellStatus::Ok);
      CHECK(m.at(t, 0, 1).status == CellStatus::Ok);
    }
  }

  TEST_CASE("unified run over a single project equals the within run") {
    const auto p = planted("solo", 9, 1.0, 0);
    for (Algorithm algo : {Algorithm::DecisionTree, Algorithm::NeuralNetwork}) {
      const auto within = run_within_project(p, config(algo));
      const auto unified = run_unified({p}, config(algo));
      REQUIRE(unified.pooled.size() == 3);
      REQUIRE(unified.per_project.size() == 1);
      for (std::size_t t = 0; t < 3; ++t) {
        CHECK(same_cell(unified.pooled[t], within[t]));
        CHECK(same_cell(unified.per_project[0][t], within[t]));
      }
    }
  }

  TEST_CASE("pooling compatible projects keeps their quality") {
    const std::vector<ProjectData> projects = {planted("a", 1, 1.0, 21), planted("b", 2, 1.0, 22)};
    const auto unified = run_unified(projects, config(Algorithm::DecisionTree));
    for (std::size_t i = 0; i < 2; ++i) {
      const auto within = run_within_project(projects[i], config(Algorithm::DecisionTree));
      for (std::size_t t = 0; t < 3; ++t) {
        CHECK(std::abs(unified.per_project[i][t].metrics.pearson - within[t].metrics.pearson) <= 0.1);
      }
    }
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(unified.pooled[t].test_rows == unified.per_project[0][t].test_rows + unified.per_project[1][t].test_rows);
    }
  }

  TEST_CASE("pooling opposed projects exposes the heterogeneity") {
    const std::vector<ProjectData> projects = {planted("esb", 11, 1.0, 7), planted("tei", 12, -1.0, 7)};
    const auto unified = run_unified(projects, config(Algorithm::DecisionTree));
    bool worse = false;
    for (std::size_t t = 0; t < 3; ++t) {
      const double pooled = unified.pooled[t].metrics.kendall;
      for (const auto& per : unified.per_project) worse |= per[t].metrics.kendall < pooled;
    }
    CHECK(worse);
  }

  TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                      if (i == 5) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
  }

  TEST_CASE("model seeds differ per algorithm and target") {
    std::set<std::uint64_t> seeds;
    for (Algorithm a : {Algorithm::DecisionTree, Algorithm::NeuralNetwork}) {
      for (Target t : kAllTargets) seeds.insert(model_seed(42, a, t));
    }
    CHECK(seeds.size() == 6);
    CHECK(model_seed(42, Algorithm::NeuralNetwork, Target::Added) ==
          model_seed(42, Algorithm::NeuralNetwork, Target::Added));
  }
}
