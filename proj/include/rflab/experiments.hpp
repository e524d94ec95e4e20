#pragma once

#include <cstdint>
#include <vector>

#include "rflab/connection.hpp"
#include "rflab/forest.hpp"
#include "rflab/report.hpp"

namespace rflab {

// Mean squared error of the forest prediction against the regression
// function m(X) (not against the noisy Y), over fresh datasets and fresh
// test draws.
struct RiskEstimate {
  double value = 0.0;
  double se = 0.0;           // across the (dataset, test point) replicates
  long long replicates = 0;  // datasets * test_points
};

RiskEstimate estimate_risk(const RegressionModel& model,
                           const BuilderConfig& cfg, int n, int m,
                           int datasets, int test_points, std::uint64_t seed);

// Smallest tree count M for which the finite-vs-infinite risk gap bound
// 8 (sup|m|^2 + sigma^2 (1 + 4 ln n)) / M drops below epsilon.  At least 1.
int trees_needed(double epsilon, double m_inf_norm, double sigma, int n);

// Decomposition of the finite-forest risk: for each M, the direct gap
// estimate, the predicted gap (mean tree variance / M), the equality
// residual risk(M) - risk(ref) - gap, the 1/M slope, and the analytic
// envelope.  Requires m_ref >= 100 * max(m_list).
Report risk_gap_experiment(const RegressionModel& model,
                           const BuilderConfig& cfg, int n,
                           const std::vector<int>& m_list, int m_ref,
                           int datasets, int test_points, std::uint64_t seed);

// Distribution of sqrt(M) (m_M(x) - m_ref(x)) over replicate forests on one
// fixed dataset: per-point KS distance to the normal curve with the
// across-tree variance, and the variance ratio.  Requires replicates >= 200.
Report clt_experiment(const RegressionModel& model, const BuilderConfig& cfg,
                      int n, int x_points, int m, int replicates, int m_ref,
                      std::uint64_t seed);

// Sup over a lattice of |m_M - m_ref| for each M, with the fitted slope of
// log sup against log M.
Report sup_convergence_experiment(const RegressionModel& model,
                                  const BuilderConfig& cfg, int n,
                                  int grid_resolution,
                                  const std::vector<int>& m_list, int m_ref,
                                  std::uint64_t seed);

// Risk along an n-schedule with the builder's complexity grown alongside:
// uniform depth floor(log2(n)/2), quantile subsample ceil(n^(2/3)).  For the
// quantile builder the sweep also tracks the single-tree risk, which stays
// bounded away from the forest risk.
Report consistency_sweep(const RegressionModel& model, BuilderKind builder,
                         const std::vector<int>& n_list, int m, int datasets,
                         int test_points, std::uint64_t seed);

// Local-averaging diagnostics for a quantile forest at fixed data: exact
// weight normalization, per-point maximum connection frequency against
// subsample/n, leaf-cell diameter tail, and weight mass beyond a distance.
Report stone_diagnostics(const RegressionModel& model, const BuilderConfig& cfg,
                         int n, int m, int x_points, std::uint64_t seed);

// Monte Carlo of the cell side lengths seen by a uniform random query point
// in a depth-k uniform partition, per coordinate, against the analytic mean
// (1 - 1/(4d))^k of the dominating per-cut chain max(U, 1-U).
Report uniform_side_length_check(int d, int k, int trials, std::uint64_t seed);

}  // namespace rflab
