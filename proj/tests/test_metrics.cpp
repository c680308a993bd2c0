#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "churnforge/metrics.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace churnforge;
using testing_support::error_code_of;

namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, bool ties) {
  std::uniform_real_distribution<double> u(0, 1000);
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? std::floor(u(gen) / 100) : u(gen);
  return v;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("perfect prediction") {
    const std::vector<double> a = {1, 2, 3};
    const auto m = eval_metrics(a, a);
    CHECK(m.pearson == doctest::Approx(1.0));
    CHECK(m.kendall == doctest::Approx(1.0));
    CHECK(m.mae == 0.0);
    CHECK(m.nmae == 0.0);
    CHECK(m.rmsd == 0.0);
    CHECK(m.nrmsd == 0.0);
  }

  TEST_CASE("hand-computed errors") {
    const auto m = eval_metrics(std::vector<double>{2, 4}, std::vector<double>{1, 3});
    CHECK(m.mae == doctest::Approx(1.0));
    CHECK(m.nmae == doctest::Approx(0.5));
    CHECK(m.rmsd == doctest::Approx(1.0));
    CHECK(m.nrmsd == doctest::Approx(0.5));
  }

  TEST_CASE("undefined quantities are flagged zeros, never NaN") {
    const auto m = eval_metrics(std::vector<double>{5, 5, 5}, std::vector<double>{0, 0, 0});
    CHECK(m.pearson_undefined);
    CHECK(m.kendall_undefined);
    CHECK(m.nmae_undefined);
    CHECK(m.nrmsd_undefined);
    for (double v : {m.pearson, m.kendall, m.nmae, m.nrmsd}) CHECK(v == 0.0);
    CHECK(m.mae == 5.0);
    CHECK(m.rmsd == 5.0);

    const auto flat_pred = eval_metrics(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
    CHECK(flat_pred.pearson_undefined);
    CHECK_FALSE(flat_pred.nmae_undefined);
    CHECK_FALSE(flat_pred.nrmsd_undefined);

    CHECK(error_code_of([] { eval_metrics(std::vector<double>{1}, std::vector<double>{1, 2}); }) ==
          Errc::LengthMismatch);
    CHECK(error_code_of([] { eval_metrics(std::vector<double>{}, std::vector<double>{}); }) == Errc::EmptyInput);
  }

  TEST_CASE("random vectors agree with the formula-direct oracle") {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + gen() % 300;
      const bool ties = trial % 3 == 0;
      const auto p = random_vector(gen, n, ties);
      const auto a = random_vector(gen, n, ties);
      const auto m = eval_metrics(p, a);
      const auto o = oracle::metrics(p, a);
      CAPTURE(trial);
      CHECK(std::abs(m.pearson - o.pearson) <= 1e-9);
      CHECK(std::abs(m.kendall - o.kendall) <= 1e-9);
      CHECK(std::abs(m.mae - o.mae) <= 1e-9);
      CHECK(std::abs(m.nmae - o.nmae) <= 1e-9);
      CHECK(std::abs(m.rmsd - o.rmsd) <= 1e-9);
      CHECK(std::abs(m.nrmsd - o.nrmsd) <= 1e-9);
      CHECK(m.rmsd >= m.mae);
    }
  }

  TEST_CASE("invariants under transforms of the predictions") {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 5 + gen() % 100;
      const auto p = random_vector(gen, n, trial % 2 == 0);
      const auto a = random_vector(gen, n, false);
      const auto base = eval_metrics(p, a);

      std::vector<double> monotone(n), affine(n);
      for (std::size_t i = 0; i < n; ++i) {
        monotone[i] = std::exp(p[i] / 200.0) + std::cbrt(p[i]);
        affine[i] = 3.5 * p[i] + 17;
      }
      CHECK(kendall_tau_b(monotone, a) == doctest::Approx(base.kendall).epsilon(1e-12));
      CHECK(pearson(affine, a) == doctest::Approx(base.pearson).epsilon(1e-9));

      double mean = 0, lo = a[0], hi = a[0];
      for (double v : a) {
        mean += v / static_cast<double>(n);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(base.nmae == doctest::Approx(base.mae / mean).epsilon(1e-12));
      CHECK(base.nrmsd == doctest::Approx(base.rmsd / (hi - lo)).epsilon(1e-12));
    }
  }
}
