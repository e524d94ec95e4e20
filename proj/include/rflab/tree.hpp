#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rflab/model.hpp"
#include "rflab/rng.hpp"

namespace rflab {

// Axis-aligned box inside [0,1]^d.  Boxes are half-open [lo, hi) along every
// coordinate except that the face touching the domain's upper boundary is
// closed, so the leaves of a tree tile the whole cube.
struct Cell {
  std::vector<double> lower, upper;

  bool contains(std::span<const double> x) const;
  // Sup-norm diameter: the longest side.
  double diameter() const;
};

enum class BuilderKind { Uniform, Quantile, Breiman };

struct UniformConfig {
  int levels = 4;  // every cell is split exactly this many times
};

struct QuantileConfig {
  double q = 0.8;        // quantile fraction bound, in [1/2, 1)
  int subsample = 0;     // points drawn without replacement; 0 means all n
  double fixed_qn = -1;  // < 0: draw q_n per split; else use this value,
                         // clamped into (1/N, 1-1/N) cell by cell
};

enum class Resample { None, Subsample, Bootstrap };

struct BreimanConfig {
  int mtry = 0;      // candidate dims per split; 0 means all d
  int nodesize = 5;  // do not split cells at or below this size
  Resample resample = Resample::None;
  int subsample = 0;  // used when resample == Subsample
};

struct BuilderConfig {
  BuilderKind kind = BuilderKind::Uniform;
  UniformConfig uniform;
  QuantileConfig quantile;
  BreimanConfig breiman;

  // Throws std::invalid_argument on out-of-range settings.
  void validate(int dim, int n) const;
  std::string describe() const;
};

// Nodes are stored preorder, root at index 0.
// Internal node: value = split position, a/b = left/right child, dim = split
// dimension, excluded = training index dropped from both children at a
// quantile split (-1 otherwise).
// Leaf: dim = -1, value = mean response of retained points (0 if none),
// a/b = offset/count into Tree::items.
struct TreeNode {
  double value = 0.0;
  std::int32_t a = 0;
  std::int32_t b = 0;
  std::int32_t dim = -1;
  std::int32_t excluded = -1;
};

struct Tree {
  int dim = 0;
  int n_data = 0;  // size of the attached TrainingSet; 0 = partition only
  BuilderKind kind = BuilderKind::Uniform;
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> items;  // concatenated leaf membership
  // Per-node audit trail: drawn q_n for quantile splits, variance reduction
  // for breiman splits.  Empty for uniform trees.
  std::vector<double> audit;

  std::size_t leaf_count() const;
  const TreeNode& leaf_at(std::span<const double> x) const;
};

// Data-independent recursive partition: at each cell a dimension is drawn
// uniformly, then a split position uniformly on the cell's range.
Tree build_uniform_tree(int dim, int levels, Rng theta);

// Fills leaf membership and means of a partition-only tree by descending
// every training point.  Valid only for uniform trees.
void attach_data(Tree& tree, const TrainingSet& data);

// Recursive quantile partition of a without-replacement subsample: cells with
// more than two points are cut at an empirical quantile of a uniformly drawn
// dimension, with the quantile point itself excluded from both children;
// two-point cells are cut at the midpoint (both points kept).  Every leaf
// holds exactly one retained point (ties aside).
Tree build_quantile_tree(const TrainingSet& data, const QuantileConfig& cfg,
                         Rng theta);

// CART-style variance-reduction splits over mtry candidate dimensions, split
// positions at midpoints of consecutive in-cell values.  Ties broken toward
// the smallest dimension, then the smallest position.
Tree build_breiman_tree(const TrainingSet& data, const BreimanConfig& cfg,
                        Rng theta);

// Dispatch on cfg.kind; uniform trees come back attached to data.
Tree build_tree(const TrainingSet& data, const BuilderConfig& cfg, Rng theta);

struct QuantilePick {
  int rank = 0;      // 1-based order-statistic index
  double value = 0.0;
};

// The unique order statistic whose empirical CDF brackets q_n:
// F(X_(rank-1)) <= q_n < F(X_(rank)), with F(X_(0)) = 0.  values must be
// sorted ascending and q_n must lie strictly inside (1/N, 1 - 1/N).
QuantilePick empirical_quantile(std::span<const double> values, double q_n);

// Mean response of the retained points in x's leaf; 0 for an empty leaf.
double tree_predict(const Tree& tree, const TrainingSet& data,
                    std::span<const double> x);

// Length-n local averaging weights: 1/N for each of the N retained points in
// x's leaf (multiplicity-aware under bootstrap), 0 elsewhere.
std::vector<double> tree_weights(const Tree& tree, const TrainingSet& data,
                                 std::span<const double> x);

// The leaf cell containing x, reconstructed by descent from [0,1]^d.
Cell leaf_cell_of(const Tree& tree, std::span<const double> x);

// Debug dump: nodes with dim/position, leaves with retained indices.
std::string tree_to_json(const Tree& tree);

}  // namespace rflab
