#pragma once

#include <cstdint>
#include <span>

#include "rflab/forest.hpp"

namespace rflab {

// Monte Carlo estimate of the probability that two points fall in the same
// cell of a randomized tree partition.
struct ConnectionEstimate {
  double point_estimate = 0.0;  // successes / trials
  double se = 0.0;              // sqrt(p(1-p)/trials)
  long long trials = 0;
  long long successes = 0;
};

// Fraction of independent tree draws whose leaf cell contains both x and z.
// The trial streams depend only on (seed, trial index), never on the pair,
// so swapping x and z reproduces the estimate exactly.
ConnectionEstimate connection_mc(const TrainingSet& data,
                                 const BuilderConfig& cfg,
                                 std::span<const double> x,
                                 std::span<const double> z, int trials,
                                 std::uint64_t seed);

// Same estimate for a data-free uniform partition of given depth; simulates
// only the splits along the path of the cell containing x.
ConnectionEstimate uniform_connection_mc(int dim, int levels,
                                         std::span<const double> x,
                                         std::span<const double> z, int trials,
                                         std::uint64_t seed);

// Exact probability that a depth-k uniform partition of [0,1] keeps 0 and x
// in the same cell: 1 - x * sum_{j<k} (-ln x)^j / j!.  Limit value 1 at x=0.
double uniform_connection_1d(int k, double x);

// Multivariate extension at an origin-anchored pair: sums over all ways to
// distribute the k splits across coordinates (multinomial weights) with the
// one-dimensional closed form as per-coordinate factor.  Exact up to
// floating-point rounding; guarded to d <= 6, k <= 25.
double uniform_connection_origin(int k, std::span<const double> x);

// For uniform partitions the origin-anchored probability at separation
// |x - z| never exceeds the probability for the pair itself.
struct CouplingCheck {
  double closed_form = 0.0;  // exact value at the componentwise separation
  ConnectionEstimate mc;     // estimate for the pair
  bool ok = false;  // closed_form <= mc + 3 max(estimated se, se at closed_form)
};

CouplingCheck coupling_inequality_check(int k, std::span<const double> x,
                                        std::span<const double> z, int trials,
                                        std::uint64_t seed);

// Largest certified mesh: the widest dyadic separation eta such that the
// estimated sup of 1 - K over probe pairs at separation <= eta stays within
// epsilon^2 / 8 (plus Monte Carlo tolerance).
struct GridStepEstimate {
  double epsilon = 0.0;
  double delta_hat = 0.0;       // 0 when even the finest probe fails
  int probe_resolution = 0;     // probes at 2^-e, e = 0..probe_resolution
  double analytic_lower = 0.0;  // uniform partitions only; NaN otherwise
};

GridStepEstimate grid_step_estimate(const TrainingSet& data,
                                    const BuilderConfig& cfg, double epsilon,
                                    int probe_resolution, int trials,
                                    std::uint64_t seed);

// Analytic lower bound for the uniform-partition grid step.  Two printed
// forms of this bound are in circulation, differing in whether the constant
// enters the exponent directly or through its cube root; both are returned
// so callers can take the conservative minimum.
struct GridStepBound {
  double constant = 0.0;    // (8 d e (k+2)!)^(1/3)
  double direct = 0.0;      // exp(-constant / eps^(2/3))
  double cube_root = 0.0;   // exp(-cbrt(constant) / eps^(2/3))

  double min() const { return direct < cube_root ? direct : cube_root; }
};

GridStepBound uniform_grid_step_bound(int k, int d, double epsilon);

}  // namespace rflab
