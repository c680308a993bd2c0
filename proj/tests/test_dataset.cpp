#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "churnforge/dataset.hpp"
#include "churnforge/org_features.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace churnforge;
using testing_support::error_code_of;

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kYear = 365 * kDay;

RevisionChurn point(Timestamp t, std::int64_t a, std::int64_t m, std::int64_t d) {
  RevisionChurn rc;
  rc.revision_id = std::to_string(t);
  rc.timestamp = t;
  rc.totals = {a, m, d};
  return rc;
}

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

bool ascending(const std::vector<std::size_t>& v) { return std::is_sorted(v.begin(), v.end()); }

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("window examples") {
    const Timestamp t0 = 1'000'000'000;
    const std::vector<RevisionChurn> series = {point(t0, 10, 1, 2), point(t0 + 100 * kDay, 20, 3, 4),
                                               point(t0 + 400 * kDay, 30, 5, 6)};
    const auto w = compute_targets(series, kYear, t0 + 700 * kDay);
    REQUIRE(w.size() == 3);
    CHECK(w[0].target == ChurnTarget{20, 3, 4});
    CHECK(w[1].target == ChurnTarget{30, 5, 6});
    CHECK(w[2].target == ChurnTarget{0, 0, 0});
    CHECK(w[0].eligible);
    CHECK(w[1].eligible);
    CHECK_FALSE(w[2].eligible);
  }

  TEST_CASE("window boundary is half open and eligibility is inclusive") {
    const std::vector<RevisionChurn> series = {point(0, 1, 0, 0), point(0, 2, 0, 0), point(kYear, 4, 0, 0),
                                               point(kYear + 1, 8, 0, 0)};
    const auto w = compute_targets(series, kYear, kYear);
    CHECK(w[0].target.cumulative_yearly_added == 4);
    CHECK(w[1].target.cumulative_yearly_added == 4);
    CHECK(w[0].eligible);
    CHECK_FALSE(w[2].eligible);
    CHECK(compute_targets({}, kYear, 0).empty());
  }

  TEST_CASE("random series match the windowed-sum oracle") {
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<RevisionChurn> series;
      std::vector<oracle::SeriesPoint> points;
      Timestamp t = 1'100'000'000;
      for (int i = 0; i < 100; ++i) {
        t += static_cast<Timestamp>(gen() % (30 * kDay)) * (gen() % 5 == 0 ? 0 : 1);
        const std::int64_t a = static_cast<std::int64_t>(gen() % 500), m = static_cast<std::int64_t>(gen() % 50),
                           d = static_cast<std::int64_t>(gen() % 200);
        series.push_back(point(t, a, m, d));
        points.push_back({t, {a, m, d}});
      }
      const std::int64_t horizon = trial % 2 ? kYear : static_cast<std::int64_t>(1 + gen() % 200) * kDay;
      const Timestamp extraction = t - static_cast<Timestamp>(gen() % (400 * kDay));
      const auto got = compute_targets(series, horizon, extraction);
      const auto want = oracle::window_targets(points, horizon, extraction);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CAPTURE(i);
        CHECK(got[i].target.cumulative_yearly_added == want[i].target[0]);
        CHECK(got[i].target.cumulative_yearly_modified == want[i].target[1]);
        CHECK(got[i].target.cumulative_yearly_deleted == want[i].target[2]);
        CHECK(got[i].eligible == want[i].eligible);
        CHECK(got[i].eligible == (series[i].timestamp + horizon <= extraction));
      }

      // Shifting every timestamp and the extraction point leaves targets unchanged.
      auto shifted = series;
      for (auto& p : shifted) p.timestamp += 12345;
      const auto moved = compute_targets(shifted, horizon, extraction + 12345);
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(moved[i].target == got[i].target);
        CHECK(moved[i].eligible == got[i].eligible);
      }
    }
  }

  TEST_CASE("dataset rows join features, churn and windows") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 4; ++trial) {
      const auto bundle = testing_support::random_history(gen, 60);
      const auto ds = build_dataset("p", bundle);
      REQUIRE(ds.feature_names.size() == 74);
      REQUIRE(ds.rows.size() == bundle.revisions.size());
      const auto org = scan_history(bundle);
      const auto code = code_feature_series(bundle);
      const auto windows = compute_targets(churn_of_history(bundle), kYear, bundle.extraction_timestamp);
      CHECK(std::any_of(code.begin(), code.end(), [](const CodeFeatures& c) { return c.elements > 0; }));
      for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        const auto& row = ds.rows[i];
        CHECK(row.project_id == "p");
        CHECK(row.revision_id == bundle.revisions[i].revision_id);
        REQUIRE(row.features.size() == 74);
        const auto ov = org[i].features.values();
        const auto cv = code[i].values();
        CHECK(std::equal(ov.begin(), ov.end(), row.features.begin()));
        CHECK(std::equal(cv.begin(), cv.end(), row.features.begin() + 13));
        CHECK(row.target == windows[i].target);
        CHECK(row.eligible == windows[i].eligible);
      }
      const auto org_only = build_dataset("p", bundle, {.feature_set = FeatureSet::Org});
      CHECK(org_only.feature_names.size() == 13);
      CHECK(select_features(ds, FeatureSet::Org).rows[5].features == org_only.rows[5].features);
      CHECK(select_features(ds, FeatureSet::Code).feature_names.size() == 61);
      CHECK(error_code_of([&] { select_features(org_only, FeatureSet::Code); }) == Errc::SchemaMismatch);
    }
  }

  TEST_CASE("per-file rows sum only their own path") {
    std::mt19937_64 gen(9);
    const auto bundle = testing_support::random_history(gen, 80);
    const auto churn = churn_of_history(bundle);
    const auto ds = build_dataset("p", bundle, {.feature_set = FeatureSet::Org, .per_file = true});
    std::size_t k = 0;
    for (std::size_t r = 0; r < churn.size(); ++r) {
      for (const auto& fc : churn[r].per_file) {
        REQUIRE(k < ds.rows.size());
        const auto& row = ds.rows[k++];
        CHECK(row.path == fc.path);
        CHECK(row.revision_id == churn[r].revision_id);
        ChurnTarget want;
        for (std::size_t s = 0; s < churn.size(); ++s) {
          if (churn[s].timestamp <= churn[r].timestamp || churn[s].timestamp > churn[r].timestamp + kYear) continue;
          for (const auto& other : churn[s].per_file) {
            if (other.path != fc.path) continue;
            want.cumulative_yearly_added += other.churn.added;
            want.cumulative_yearly_modified += other.churn.modified;
            want.cumulative_yearly_deleted += other.churn.deleted;
          }
        }
        CHECK(row.target == want);
      }
    }
    CHECK(k == ds.rows.size());
  }

  TEST_CASE("dataset CSV round trip") {
    std::mt19937_64 gen(21);
    const auto bundle = testing_support::random_history(gen, 30);
    for (bool per_file : {false, true}) {
      const auto ds = build_dataset("proj-x", bundle, {.per_file = per_file});
      const auto back = parse_dataset_csv(dataset_csv(ds));
      CHECK(back.feature_names == ds.feature_names);
      REQUIRE(back.rows.size() == ds.rows.size());
      for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        CHECK(back.rows[i].project_id == ds.rows[i].project_id);
        CHECK(back.rows[i].revision_id == ds.rows[i].revision_id);
        CHECK(back.rows[i].timestamp == ds.rows[i].timestamp);
        CHECK(back.rows[i].path == ds.rows[i].path);
        CHECK(back.rows[i].features == ds.rows[i].features);
        CHECK(back.rows[i].target == ds.rows[i].target);
        CHECK(back.rows[i].eligible == ds.rows[i].eligible);
      }
    }
    CHECK(error_code_of([] { parse_dataset_csv("nonsense,header\n1,2\n"); }) == Errc::MalformedCsv);
    CHECK(error_code_of([] { parse_dataset_csv(""); }) == Errc::MalformedCsv);
  }

  TEST_CASE("target scaling") {
    const std::vector<double> y = {0, 50, 100};
    const auto p = fit_target_scaling(y);
    CHECK(p.scale(0) == 0.0);
    CHECK(p.scale(50) == 0.5);
    CHECK(p.scale(100) == 1.0);
    CHECK(error_code_of([] { fit_target_scaling(std::vector<double>{0, 0, 0}); }) == Errc::DegenerateTarget);
    CHECK(error_code_of([] { fit_target_scaling(std::vector<double>{}); }) == Errc::EmptyInput);

    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v(20);
      for (auto& x : v) x = u(gen);
      const auto s = fit_target_scaling(v);
      for (double x : v) {
        const double sx = s.scale(x);
        CHECK(sx >= -1e-12);
        CHECK(sx <= 1 + 1e-12);
        CHECK(std::abs(s.unscale(sx) - x) <= 1e-9 * std::max(1.0, std::abs(x)));
      }
    }
  }

  TEST_CASE("feature scaling keeps constant columns at zero") {
    Matrix x(3, 2);
    x(0, 0) = 1, x(1, 0) = 3, x(2, 0) = 5;
    x(0, 1) = x(1, 1) = x(2, 1) = 7;
    const auto p = fit_feature_scaling(x);
    CHECK(p[0].scale(3) == 0.5);
    CHECK(p[1].degenerate());
    CHECK(p[1].scale(7) == 0.0);
  }

  TEST_CASE("random holdout") {
    const auto a = random_holdout(10, 42);
    CHECK(a.train.size() == 7);
    CHECK(a.test.size() == 3);
    const auto b = random_holdout(10, 42);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK(error_code_of([] { random_holdout(9, 1); }) == Errc::TooFewRows);

    for (std::size_t n : {10u, 11u, 57u, 1000u}) {
      const auto h = random_holdout(n, n * 7);
      CHECK(h.train.size() == static_cast<std::size_t>(std::llround(static_cast<double>(n) * 0.7)));
      CHECK(ascending(h.train));
      CHECK(ascending(h.test));
      auto all = as_set(h.train);
      for (auto i : h.test) CHECK(all.insert(i).second);
      CHECK(all.size() == n);
      CHECK(*all.rbegin() == n - 1);
    }
    CHECK(random_holdout(1000, 1).train != random_holdout(1000, 2).train);
  }

  TEST_CASE("k-fold caps at 7000 and deals near-equal folds") {
    const auto folds = kfold(9000, 3, 42);
    REQUIRE(folds.size() == 3);
    std::multiset<std::size_t> sizes;
    std::set<std::size_t> all;
    for (const auto& f : folds) {
      sizes.insert(f.size());
      for (auto i : f) {
        CHECK(i < 9000);
        CHECK(all.insert(i).second);
      }
    }
    CHECK(sizes == std::multiset<std::size_t>{2333, 2333, 2334});
    CHECK(all.size() == 7000);
    CHECK(kfold(9000, 3, 42) == folds);

    const auto four = kfold(1001, 4, 5);
    std::set<std::size_t> every;
    for (const auto& f : four) {
      CHECK((f.size() == 250 || f.size() == 251));
      every.insert(f.begin(), f.end());
    }
    CHECK(every.size() == 1001);
    CHECK(error_code_of([] { kfold(2, 3, 1); }) == Errc::TooFewRows);
  }

  TEST_CASE("leave-project-out and stratified holdout") {
    std::vector<std::string> ids;
    for (int i = 0; i < 30; ++i) ids.push_back(i % 3 == 0 ? "a" : i % 3 == 1 ? "b" : "c");
    for (int i = 0; i < 20; ++i) ids.push_back("b");
    const auto lpo = leave_project_out(ids);
    REQUIRE(lpo.size() == 3);
    CHECK(lpo[0].first == "a");
    CHECK(lpo[1].first == "b");
    CHECK(lpo[2].first == "c");
    for (const auto& [name, h] : lpo) {
      for (auto i : h.test) CHECK(ids[i] == name);
      for (auto i : h.train) CHECK(ids[i] != name);
      CHECK(h.train.size() + h.test.size() == ids.size());
    }

    const auto s = stratified_holdout(ids, 99);
    CHECK(s.train.size() + s.test.size() == ids.size());
    std::map<std::string, std::size_t> train_per;
    for (auto i : s.train) ++train_per[ids[i]];
    CHECK(train_per["a"] == 7);
    CHECK(train_per["b"] == 21);
    CHECK(train_per["c"] == 7);
    CHECK(as_set(s.train).size() == s.train.size());
    CHECK(holdout_seed(99, "a") != holdout_seed(99, "b"));
  }
}
