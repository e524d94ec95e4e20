#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rflab/tree.hpp"

namespace rflab {

// Query-point container, row-major like TrainingSet.
struct PointSet {
  int dim = 1;
  std::vector<double> xs;

  int size() const { return dim ? static_cast<int>(xs.size()) / dim : 0; }
  std::span<const double> point(int i) const {
    return {xs.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  // Evenly spaced 1-d grid on [0,1] including both endpoints.
  static PointSet grid1d(int resolution);
  // resolution^dim lattice on [0,1]^dim.
  static PointSet lattice(int dim, int resolution);
  static PointSet sample(const RegressionModel& model, int count,
                         std::uint64_t seed);
};

// A grown forest keeps its own copy of the training set, so predictions
// need only the query point.
struct Forest {
  BuilderConfig cfg;
  std::uint64_t seed = 0;
  TrainingSet data;
  std::vector<Tree> trees;

  int size() const { return static_cast<int>(trees.size()); }
};

// M independent trees; tree m is built from the sub-stream (seed, "tree", m),
// so the forest is identical under any thread count.
Forest grow_forest(const TrainingSet& data, const BuilderConfig& cfg, int M,
                   std::uint64_t seed);

// Mean of per-tree predictions, accumulated in tree order with compensated
// summation.
double forest_predict(const Forest& forest, std::span<const double> x);

// Mean of per-tree weight vectors.  Entries are accumulated per training
// index over trees, then divided once by M.
std::vector<double> forest_weights(const Forest& forest,
                                   std::span<const double> x);

struct PointStats {
  double mean = 0.0;      // MC estimate of the infinite-forest prediction
  double variance = 0.0;  // unbiased across-tree variance of predictions
  double se_mean = 0.0;   // sqrt(variance / M)
  int m = 0;
};

// Streams M independent trees past the query points without storing them:
// per point, the running mean/variance of tree predictions.  Trees are
// consumed in fixed 256-block order, so results do not depend on threading.
std::vector<PointStats> forest_point_stats(const TrainingSet& data,
                                           const BuilderConfig& cfg, int M,
                                           std::uint64_t seed,
                                           const PointSet& points);

struct VarianceEstimate {
  double value = 0.0;  // unbiased sample variance of tree predictions at x
  double se = 0.0;     // from the estimated fourth central moment
  int m = 0;
};

// Across-theta variance of the single-tree prediction at x, over m_var
// independent trees.
VarianceEstimate theta_variance(const TrainingSet& data,
                                const BuilderConfig& cfg,
                                std::span<const double> x, int m_var,
                                std::uint64_t seed);

struct SigmaTildeCheck {
  VarianceEstimate estimate;
  double bound = 0.0;  // 4 max_i Y_i^2
  bool ok = false;     // estimate.value <= bound + 3 se
};

// Same estimator as theta_variance (identical seeds give identical values),
// checked against the 4 max Y^2 envelope.
SigmaTildeCheck sigma_tilde_sq(const TrainingSet& data,
                               const BuilderConfig& cfg,
                               std::span<const double> x, int m_var,
                               std::uint64_t seed);

}  // namespace rflab
