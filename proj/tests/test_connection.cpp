#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rflab/connection.hpp"

using namespace rflab;

namespace {

BuilderConfig uniform_cfg(int levels) {
  BuilderConfig cfg;
  cfg.kind = BuilderKind::Uniform;
  cfg.uniform.levels = levels;
  return cfg;
}

TrainingSet dummy_data(int dim) {
  RegressionModel m = parse_model("sines", dim, 0.0, "uniform");
  return sample_dataset(m, 10, 1);
}

}  // namespace

TEST_CASE("one-dimensional closed form hits hand values") {
  // k=0 and x=0 are the always-connected cases.
  CHECK(uniform_connection_1d(0, 0.7) == 1.0);
  CHECK(uniform_connection_1d(5, 0.0) == 1.0);

  // One split: both points survive iff the cut misses (0, x).
  CHECK(uniform_connection_1d(1, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(uniform_connection_1d(1, 0.25) == doctest::Approx(0.75).epsilon(1e-15));

  // Two splits at separation one half.
  double expected = 1.0 - 0.5 * (1.0 + std::log(2.0));
  CHECK(uniform_connection_1d(2, 0.5) ==
        doctest::Approx(expected).epsilon(1e-15));

  // Separation one: never connected once a split exists.
  for (int k : {1, 2, 5}) CHECK(uniform_connection_1d(k, 1.0) == 0.0);

  CHECK_THROWS_AS(uniform_connection_1d(-1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(uniform_connection_1d(2, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(uniform_connection_1d(2, 1.1), std::invalid_argument);
}

TEST_CASE("closed form satisfies the one-split recursion") {
  // Conditioning on the first cut u (which must exceed x) and rescaling the
  // surviving cell gives K_k(x) = integral over u in (x,1) of K_{k-1}(x/u).
  const int steps = 20000;
  for (int k : {2, 3, 4, 6}) {
    for (double x : {0.1, 0.37, 0.8}) {
      double acc = 0.0;
      double h = (1.0 - x) / steps;
      for (int i = 0; i < steps; ++i) {
        double u = x + (i + 0.5) * h;
        acc += uniform_connection_1d(k - 1, x / u) * h;
      }
      // Absolute tolerance: the midpoint rule is exact to ~1e-8 here, and
      // the closed form itself can be much smaller than that.
      CHECK(std::abs(uniform_connection_1d(k, x) - acc) <= 1e-6);
    }
  }
}

TEST_CASE("closed form decreases in depth by exactly the series term") {
  for (double x : {0.05, 0.3, 0.6, 0.95}) {
    double w = -std::log(x);
    double fact = 1.0;
    for (int k = 0; k <= 12; ++k) {
      if (k >= 1) fact *= k;
      double drop = uniform_connection_1d(k, x) -
                    uniform_connection_1d(k + 1, x);
      double term = x * std::pow(w, k) / fact;
      // The values themselves are 1 - (near-one series), so the difference
      // carries absolute rounding noise of order 1e-16.
      CHECK(std::abs(drop - term) <= 1e-12);
      CHECK(drop >= -1e-15);
    }
  }
}

TEST_CASE("multivariate origin form reduces to the 1-d form") {
  std::vector<double> x(1);
  for (int k : {0, 1, 3, 7, 10}) {
    for (double v : {0.0, 0.2, 0.55, 1.0}) {
      x[0] = v;
      CHECK(uniform_connection_origin(k, x) ==
            doctest::Approx(uniform_connection_1d(k, v)).epsilon(1e-14));
    }
  }
}

TEST_CASE("multivariate origin form matches manual small cases") {
  // One split in d=2: the split lands on either coordinate with equal
  // probability, and the other coordinate is untouched.
  std::vector<double> x = {0.5, 0.5};
  CHECK(uniform_connection_origin(1, x) ==
        doctest::Approx(0.5).epsilon(1e-14));

  x = {0.3, 0.8};
  double manual1 = 0.5 * uniform_connection_1d(1, 0.3) +
                   0.5 * uniform_connection_1d(1, 0.8);
  CHECK(uniform_connection_origin(1, x) ==
        doctest::Approx(manual1).epsilon(1e-14));

  // Two splits in d=2: (2,0), (1,1), (0,2) with multinomial weights.
  double a = 0.25, b = 0.6;
  x = {a, b};
  double manual2 = 0.25 * uniform_connection_1d(2, a) +
                   0.5 * uniform_connection_1d(1, a) *
                       uniform_connection_1d(1, b) +
                   0.25 * uniform_connection_1d(2, b);
  CHECK(uniform_connection_origin(2, x) ==
        doctest::Approx(manual2).epsilon(1e-13));

  // k=0 connects everything regardless of dimension.
  std::vector<double> z = {0.9, 0.9, 0.9};
  CHECK(uniform_connection_origin(0, z) == 1.0);
}

TEST_CASE("multivariate origin form rejects oversized instances") {
  std::vector<double> big(7, 0.5);
  CHECK_THROWS_AS(uniform_connection_origin(1, big), std::invalid_argument);
  std::vector<double> ok(2, 0.5);
  CHECK_THROWS_AS(uniform_connection_origin(26, ok), std::invalid_argument);
  CHECK_NOTHROW(uniform_connection_origin(25, ok));
}

TEST_CASE("monte carlo connection is exact at coincident points") {
  std::vector<double> x = {0.42, 0.77};
  ConnectionEstimate e = uniform_connection_mc(2, 5, x, x, 5000, 3);
  CHECK(e.point_estimate == 1.0);
  CHECK(e.successes == e.trials);
  CHECK(e.se == 0.0);

  // Data-dependent builders connect a point with itself too.
  TrainingSet data = dummy_data(2);
  BuilderConfig q;
  q.kind = BuilderKind::Quantile;
  q.quantile.subsample = 5;
  ConnectionEstimate eq = connection_mc(data, q, x, x, 400, 3);
  CHECK(eq.point_estimate == 1.0);
}

TEST_CASE("monte carlo connection is exactly symmetric") {
  std::vector<double> x = {0.1, 0.8}, z = {0.35, 0.6};
  ConnectionEstimate a = uniform_connection_mc(2, 4, x, z, 20000, 11);
  ConnectionEstimate b = uniform_connection_mc(2, 4, z, x, 20000, 11);
  CHECK(a.successes == b.successes);
  CHECK(a.point_estimate == b.point_estimate);

  TrainingSet data = dummy_data(2);
  BuilderConfig q;
  q.kind = BuilderKind::Quantile;
  q.quantile.subsample = 6;
  ConnectionEstimate c = connection_mc(data, q, x, z, 500, 11);
  ConnectionEstimate d = connection_mc(data, q, z, x, 500, 11);
  CHECK(c.successes == d.successes);
  CHECK(c.point_estimate >= 0.0);
  CHECK(c.point_estimate <= 1.0);
}

TEST_CASE("monte carlo matches the closed form at the origin") {
  std::vector<double> zero1 = {0.0}, x1 = {0.4};
  ConnectionEstimate e = uniform_connection_mc(1, 3, zero1, x1, 200000, 17);
  double closed = uniform_connection_1d(3, 0.4);
  CHECK(std::abs(e.point_estimate - closed) <= 4.0 * e.se);

  std::vector<double> zero2 = {0.0, 0.0}, x2 = {0.3, 0.5};
  ConnectionEstimate e2 = uniform_connection_mc(2, 2, zero2, x2, 200000, 19);
  double closed2 = uniform_connection_origin(2, x2);
  CHECK(std::abs(e2.point_estimate - closed2) <= 4.0 * e2.se);
}

TEST_CASE("uniform dispatch ignores the training responses") {
  TrainingSet data = dummy_data(1);
  std::vector<double> x = {0.2}, z = {0.6};
  ConnectionEstimate via_cfg =
      connection_mc(data, uniform_cfg(3), x, z, 30000, 23);
  ConnectionEstimate direct = uniform_connection_mc(1, 3, x, z, 30000, 23);
  CHECK(via_cfg.successes == direct.successes);
}

TEST_CASE("origin-separation probability never exceeds the pair's") {
  Rng r(29);
  for (int rep = 0; rep < 5; ++rep) {
    int k = 1 + static_cast<int>(r.next_below(6));
    int d = 1 + static_cast<int>(r.next_below(3));
    std::vector<double> x(d), z(d);
    for (int j = 0; j < d; ++j) {
      x[j] = r.next_double();
      z[j] = r.next_double();
    }
    CouplingCheck c = coupling_inequality_check(
        k, x, z, 40000, r.next_u64());
    CHECK(c.ok);
    CHECK(c.closed_form >= 0.0);
    CHECK(c.closed_form <= 1.0);
  }
}

TEST_CASE("analytic grid-step bounds behave as documented") {
  GridStepBound b = uniform_grid_step_bound(1, 1, 0.5);
  CHECK(b.constant ==
        doctest::Approx(std::cbrt(48.0 * std::exp(1.0))).epsilon(1e-13));
  CHECK(b.constant == doctest::Approx(5.072).epsilon(1e-3));
  double scale = std::pow(0.5, 2.0 / 3.0);
  CHECK(b.direct == doctest::Approx(std::exp(-b.constant / scale)));
  CHECK(b.cube_root ==
        doctest::Approx(std::exp(-std::cbrt(b.constant) / scale)));
  CHECK(b.min() == b.direct);  // the direct reading is always smaller

  // Both readings grow with epsilon.
  GridStepBound lo = uniform_grid_step_bound(2, 1, 0.3);
  GridStepBound hi = uniform_grid_step_bound(2, 1, 0.6);
  CHECK(lo.direct < hi.direct);
  CHECK(lo.cube_root < hi.cube_root);
  CHECK_THROWS_AS(uniform_grid_step_bound(1, 1, 0.0), std::invalid_argument);
}

TEST_CASE("grid step is total for a split-free partition") {
  TrainingSet domain;
  domain.dim = 1;
  GridStepEstimate g =
      grid_step_estimate(domain, uniform_cfg(0), 0.4, 10, 500, 7);
  CHECK(g.delta_hat == 1.0);
  CHECK(g.probe_resolution == 10);
}

TEST_CASE("grid step is monotone in epsilon and beats the analytic bound") {
  TrainingSet domain;
  domain.dim = 1;
  GridStepEstimate tight =
      grid_step_estimate(domain, uniform_cfg(2), 0.3, 12, 20000, 99);
  GridStepEstimate loose =
      grid_step_estimate(domain, uniform_cfg(2), 0.6, 12, 20000, 99);
  CHECK(tight.delta_hat <= loose.delta_hat);
  CHECK(tight.delta_hat >= tight.analytic_lower);
  CHECK(loose.delta_hat >= loose.analytic_lower);
}

TEST_CASE("grid step matches a closed-form root find") {
  // For one dimension and two splits the binding probe pair is (0, eta), so
  // delta_hat is the largest dyadic eta with 1 - K_2(0, eta) <= eps^2/8.
  TrainingSet domain;
  domain.dim = 1;
  GridStepEstimate g =
      grid_step_estimate(domain, uniform_cfg(2), 0.5, 12, 20000, 5);
  double tol = 0.5 * 0.5 / 8.0;
  int expect = -1;
  for (int e = 0; e <= 12; ++e) {
    if (1.0 - uniform_connection_1d(2, std::ldexp(1.0, -e)) <= tol) {
      expect = e;
      break;
    }
  }
  REQUIRE(expect > 0);
  CHECK(g.delta_hat == std::ldexp(1.0, -expect));
  CHECK(std::isnan(
      grid_step_estimate(dummy_data(1),
                         [] {
                           BuilderConfig c;
                           c.kind = BuilderKind::Quantile;
                           c.quantile.subsample = 5;
                           return c;
                         }(),
                         0.5, 4, 200, 5)
          .analytic_lower));
}
