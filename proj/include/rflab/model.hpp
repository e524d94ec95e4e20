#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rflab/rng.hpp"

namespace rflab {

enum class MeanKind { Constant, Linear, SineProduct, Step };
enum class XDist { Uniform, NestedMixture };

// Y = m(X) + sigma * eps on [0,1]^dim, eps standard normal, X uniform or a
// two-component mixture (uniform on the cube with prob 1/2, uniform on the
// half-cube {x1 < 1/2} with prob 1/2) whose density stays in [1/2, 3/2].
struct RegressionModel {
  int dim = 1;
  MeanKind mean = MeanKind::SineProduct;
  XDist xdist = XDist::Uniform;
  double sigma = 0.0;
  double constant = 1.0;             // Constant: m(x) = constant
  std::vector<double> coeffs;        // Linear: m(x) = <coeffs, x>; defaults to all-ones
  double step_lo = 0.0;              // Step: m(x) = step_hi if x1 >= 1/2 else step_lo
  double step_hi = 1.0;

  double mean_at(std::span<const double> x) const;
  // Exact sup of |m| over [0,1]^dim.
  double sup_norm() const;
  // Lower/upper bounds of the X density on [0,1]^dim.
  double density_lower() const { return xdist == XDist::Uniform ? 1.0 : 0.5; }
  double density_upper() const { return xdist == XDist::Uniform ? 1.0 : 1.5; }

  std::string tag() const;
};

RegressionModel parse_model(const std::string& mean_kind, int dim, double sigma,
                            const std::string& xdist);

struct TrainingSet {
  int dim = 0;
  std::vector<double> xs;  // row-major n x dim
  std::vector<double> ys;
  std::uint64_t seed = 0;
  std::string model_tag;

  int size() const { return static_cast<int>(ys.size()); }
  std::span<const double> point(int i) const {
    return {xs.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// Draws one X from the model's design distribution into out[0..dim).
void sample_x(const RegressionModel& model, Rng& rng, double* out);

// n i.i.d. pairs; point i is generated from the sub-stream (seed, "point", i),
// so any prefix/suffix split of the work reproduces the same set.
TrainingSet sample_dataset(const RegressionModel& model, int n,
                           std::uint64_t seed);

struct NoiseMaxCheck {
  double estimate = 0.0;   // MC mean of max_i eps_i^2 over replicates
  double se = 0.0;
  double bound = 0.0;      // sigma^2 * (1 + 4 log n)
  bool ok = false;         // estimate <= bound + 3 se
};

// MC check of the moment bound E[max_i eps_i^2] <= sigma^2 (1 + 4 log n).
NoiseMaxCheck max_noise_square_check(int n, double sigma, int replicates,
                                     std::uint64_t seed);

}  // namespace rflab
