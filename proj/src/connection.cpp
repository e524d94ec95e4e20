#include "rflab/connection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rflab/parallel.hpp"
#include "rflab/stats.hpp"

namespace rflab {

namespace {

ConnectionEstimate tally(long long successes, int trials) {
  ConnectionEstimate e;
  e.trials = trials;
  e.successes = successes;
  e.point_estimate = static_cast<double>(successes) / trials;
  e.se = proportion_se(e.point_estimate, static_cast<std::size_t>(trials));
  return e;
}

// Runs `trials` independent experiments split into fixed blocks; block
// boundaries depend only on the trial count, so the integer success total is
// identical under any thread count.
long long count_successes(int trials, std::uint64_t seed,
                          const std::function<bool(Rng&)>& trial) {
  int blocks = std::min(trials, 256);
  std::vector<long long> succ(blocks, 0);
  Rng master(seed);
  parallel_for(blocks, [&](std::size_t b) {
    long long lo = static_cast<long long>(b) * trials / blocks;
    long long hi = static_cast<long long>(b + 1) * trials / blocks;
    long long c = 0;
    for (long long t = lo; t < hi; ++t) {
      Rng r = master.derive("trial", static_cast<std::uint64_t>(t));
      c += trial(r);
    }
    succ[b] = c;
  });
  long long total = 0;
  for (long long c : succ) total += c;
  return total;
}

}  // namespace

ConnectionEstimate uniform_connection_mc(int dim, int levels,
                                         std::span<const double> x,
                                         std::span<const double> z, int trials,
                                         std::uint64_t seed) {
  if (dim < 1 || levels < 0)
    throw std::invalid_argument("uniform_connection_mc: bad dim/levels");
  if (static_cast<int>(x.size()) != dim || static_cast<int>(z.size()) != dim)
    throw std::invalid_argument("uniform_connection_mc: point size != dim");
  if (trials < 1)
    throw std::invalid_argument("uniform_connection_mc: trials must be >= 1");

  // Only the splits along the path of the cell containing x matter; the two
  // points part ways at the first cut that lands between them.
  long long successes = count_successes(trials, seed, [&](Rng& r) {
    double lo[8], hi[8];
    std::vector<double> lov, hiv;
    double *plo = lo, *phi = hi;
    if (dim > 8) {
      lov.assign(dim, 0.0);
      hiv.assign(dim, 1.0);
      plo = lov.data();
      phi = hiv.data();
    } else {
      for (int j = 0; j < dim; ++j) {
        lo[j] = 0.0;
        hi[j] = 1.0;
      }
    }
    for (int level = 0; level < levels; ++level) {
      int j = static_cast<int>(r.next_below(dim));
      double pos = plo[j] + r.next_double() * (phi[j] - plo[j]);
      bool xl = x[j] < pos;
      bool zl = z[j] < pos;
      if (xl != zl) return false;
      if (xl)
        phi[j] = pos;
      else
        plo[j] = pos;
    }
    return true;
  });
  return tally(successes, trials);
}

ConnectionEstimate connection_mc(const TrainingSet& data,
                                 const BuilderConfig& cfg,
                                 std::span<const double> x,
                                 std::span<const double> z, int trials,
                                 std::uint64_t seed) {
  if (static_cast<int>(x.size()) != data.dim ||
      static_cast<int>(z.size()) != data.dim)
    throw std::invalid_argument("connection_mc: point size != dim");
  if (trials < 1)
    throw std::invalid_argument("connection_mc: trials must be >= 1");
  if (cfg.kind == BuilderKind::Uniform)
    return uniform_connection_mc(data.dim, cfg.uniform.levels, x, z, trials,
                                 seed);
  cfg.validate(data.dim, data.size());
  long long successes = count_successes(trials, seed, [&](Rng& r) {
    Tree t = build_tree(data, cfg, r);
    return &t.leaf_at(x) == &t.leaf_at(z);
  });
  return tally(successes, trials);
}

double uniform_connection_1d(int k, double x) {
  if (k < 0) throw std::invalid_argument("uniform_connection_1d: k >= 0");
  if (x < 0.0 || x > 1.0)
    throw std::invalid_argument("uniform_connection_1d: x in [0,1]");
  if (k == 0 || x == 0.0) return 1.0;
  double w = -std::log(x);
  // Partial exponential series: sum_{j<k} w^j / j!, term recurrence.
  double term = 1.0;
  KahanSum s;
  s.add(term);
  for (int j = 1; j < k; ++j) {
    term *= w / j;
    s.add(term);
  }
  double v = 1.0 - x * s.value();
  return std::min(1.0, std::max(0.0, v));
}

double uniform_connection_origin(int k, std::span<const double> x) {
  int d = static_cast<int>(x.size());
  if (d < 1) throw std::invalid_argument("uniform_connection_origin: d >= 1");
  if (k < 0) throw std::invalid_argument("uniform_connection_origin: k >= 0");
  if (d > 6 || k > 25)
    throw std::invalid_argument(
        "uniform_connection_origin: instance too large (d <= 6, k <= 25)");
  if (d == 1) return uniform_connection_1d(k, x[0]);

  // Per-coordinate factors for every possible split count.
  std::vector<std::vector<double>> factor(d);
  for (int m = 0; m < d; ++m) {
    factor[m].resize(k + 1);
    for (int j = 0; j <= k; ++j) factor[m][j] = uniform_connection_1d(j, x[m]);
  }

  // Exact Pascal triangle (all entries < 2^53 for k <= 25).
  std::vector<std::vector<double>> binom(k + 1);
  for (int nI = 0; nI <= k; ++nI) {
    binom[nI].assign(nI + 1, 1.0);
    for (int r = 1; r < nI; ++r)
      binom[nI][r] = binom[nI - 1][r - 1] + binom[nI - 1][r];
  }

  // Sum over all ways to distribute k splits across the d coordinates.  The
  // multinomial weight is factored into a chain of binomial probabilities,
  // each with probability 1/(coordinates left).
  KahanSum total;
  std::function<void(int, int, double, double)> rec = [&](int m, int rem,
                                                          double w,
                                                          double prod) {
    if (m == d - 1) {
      total.add(w * prod * factor[m][rem]);
      return;
    }
    double p = 1.0 / (d - m);
    for (int km = 0; km <= rem; ++km) {
      double pmf = binom[rem][km] * std::pow(p, km) *
                   std::pow(1.0 - p, static_cast<double>(rem - km));
      rec(m + 1, rem - km, w * pmf, prod * factor[m][km]);
    }
  };
  rec(0, k, 1.0, 1.0);
  return std::min(1.0, std::max(0.0, total.value()));
}

CouplingCheck coupling_inequality_check(int k, std::span<const double> x,
                                        std::span<const double> z, int trials,
                                        std::uint64_t seed) {
  if (x.size() != z.size())
    throw std::invalid_argument("coupling_inequality_check: size mismatch");
  int d = static_cast<int>(x.size());
  std::vector<double> sep(d);
  for (int j = 0; j < d; ++j) sep[j] = std::abs(x[j] - z[j]);
  CouplingCheck c;
  c.closed_form = uniform_connection_origin(k, sep);
  c.mc = uniform_connection_mc(d, k, x, z, trials, seed);
  // The plug-in standard error collapses to zero when no trial connects,
  // which would turn every tiny-but-positive closed-form value into a
  // spurious violation; widen it with the spread at the closed-form value.
  double null_se = std::sqrt(c.closed_form * (1.0 - c.closed_form) /
                             static_cast<double>(trials));
  c.ok = c.closed_form <= c.mc.point_estimate + 3.0 * std::max(c.mc.se, null_se);
  return c;
}

GridStepBound uniform_grid_step_bound(int k, int d, double epsilon) {
  if (k < 0 || d < 1)
    throw std::invalid_argument("uniform_grid_step_bound: bad k/d");
  if (epsilon <= 0.0)
    throw std::invalid_argument("uniform_grid_step_bound: epsilon > 0");
  double fact = 1.0;  // (k+2)!
  for (int i = 2; i <= k + 2; ++i) fact *= i;
  GridStepBound b;
  b.constant = std::cbrt(8.0 * d * std::exp(1.0) * fact);
  double scale = std::pow(epsilon, 2.0 / 3.0);
  b.direct = std::exp(-b.constant / scale);
  b.cube_root = std::exp(-std::cbrt(b.constant) / scale);
  return b;
}

GridStepEstimate grid_step_estimate(const TrainingSet& data,
                                    const BuilderConfig& cfg, double epsilon,
                                    int probe_resolution, int trials,
                                    std::uint64_t seed) {
  if (epsilon <= 0.0)
    throw std::invalid_argument("grid_step_estimate: epsilon > 0");
  if (probe_resolution < 1 || probe_resolution > 40)
    throw std::invalid_argument("grid_step_estimate: resolution in [1,40]");
  if (trials < 1)
    throw std::invalid_argument("grid_step_estimate: trials must be >= 1");
  int d = data.dim;
  double tol = epsilon * epsilon / 8.0;

  Rng master(seed);
  std::uint64_t pair_counter = 0;
  // Pair streams are indexed by a running counter that depends only on
  // (resolution, d), so the same seed reproduces the same probes for every
  // epsilon; that makes delta_hat exactly monotone in epsilon.
  auto probe_pair = [&](std::span<const double> a, std::span<const double> b) {
    std::uint64_t s = master.derive("pair", pair_counter++).next_u64();
    ConnectionEstimate est = connection_mc(data, cfg, a, b, trials, s);
    return (1.0 - est.point_estimate) <= tol + 3.0 * est.se;
  };

  // Largest e whose whole suffix (finer separations included) passes.
  std::vector<int> level_ok(probe_resolution + 1, 0);
  for (int e = probe_resolution; e >= 0; --e) {
    double eta = std::ldexp(1.0, -e);
    bool ok = true;
    std::vector<double> a(d), b(d);
    // Corner-anchored axis pairs.
    for (int axis = 0; axis < d; ++axis) {
      std::fill(a.begin(), a.end(), 0.0);
      std::fill(b.begin(), b.end(), 0.0);
      b[axis] = eta;
      ok = probe_pair(a, b) && ok;
      std::fill(a.begin(), a.end(), 1.0);
      std::fill(b.begin(), b.end(), 1.0);
      a[axis] = 1.0 - eta;
      ok = probe_pair(a, b) && ok;
    }
    // Random interior pairs: axis-aligned and diagonal separations.
    Rng pr = master.derive("probe", static_cast<std::uint64_t>(e));
    for (int rep = 0; rep < 8; ++rep) {
      for (int j = 0; j < d; ++j) a[j] = pr.next_double() * (1.0 - eta);
      b = a;
      int axis = static_cast<int>(pr.next_below(d));
      b[axis] = a[axis] + eta;
      ok = probe_pair(a, b) && ok;
    }
    for (int rep = 0; rep < 4; ++rep) {
      for (int j = 0; j < d; ++j) a[j] = pr.next_double() * (1.0 - eta);
      for (int j = 0; j < d; ++j) b[j] = a[j] + eta;
      ok = probe_pair(a, b) && ok;
    }
    level_ok[e] = ok ? 1 : 0;
  }
  int first_pass = -1;
  for (int e = probe_resolution; e >= 0; --e) {
    if (level_ok[e] != 1) break;
    first_pass = e;
  }

  GridStepEstimate g;
  g.epsilon = epsilon;
  g.probe_resolution = probe_resolution;
  g.delta_hat = first_pass < 0 ? 0.0 : std::ldexp(1.0, -first_pass);
  if (cfg.kind == BuilderKind::Uniform)
    g.analytic_lower =
        uniform_grid_step_bound(cfg.uniform.levels, d, epsilon).min();
  else
    g.analytic_lower = std::numeric_limits<double>::quiet_NaN();
  return g;
}

}  // namespace rflab
