#include "rflab/forest.hpp"

#include <cmath>
#include <stdexcept>

#include "rflab/parallel.hpp"
#include "rflab/stats.hpp"

namespace rflab {

PointSet PointSet::grid1d(int resolution) {
  if (resolution < 2) throw std::invalid_argument("grid1d: resolution >= 2");
  PointSet p;
  p.dim = 1;
  p.xs.resize(resolution);
  for (int i = 0; i < resolution; ++i)
    p.xs[i] = static_cast<double>(i) / (resolution - 1);
  return p;
}

PointSet PointSet::lattice(int dim, int resolution) {
  if (dim < 1 || resolution < 2)
    throw std::invalid_argument("lattice: bad dim/resolution");
  double count = std::pow(resolution, dim);
  if (count > 1e5) throw std::invalid_argument("lattice: too many points");
  PointSet p;
  p.dim = dim;
  int total = static_cast<int>(count);
  p.xs.resize(static_cast<std::size_t>(total) * dim);
  for (int i = 0; i < total; ++i) {
    int rem = i;
    for (int j = 0; j < dim; ++j) {
      p.xs[static_cast<std::size_t>(i) * dim + j] =
          static_cast<double>(rem % resolution) / (resolution - 1);
      rem /= resolution;
    }
  }
  return p;
}

PointSet PointSet::sample(const RegressionModel& model, int count,
                          std::uint64_t seed) {
  PointSet p;
  p.dim = model.dim;
  p.xs.resize(static_cast<std::size_t>(count) * model.dim);
  Rng master(seed);
  for (int i = 0; i < count; ++i) {
    Rng r = master.derive("query", i);
    sample_x(model, r, p.xs.data() + static_cast<std::size_t>(i) * model.dim);
  }
  return p;
}

Forest grow_forest(const TrainingSet& data, const BuilderConfig& cfg, int M,
                   std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("grow_forest: M must be >= 1");
  cfg.validate(data.dim, data.size());
  Forest f;
  f.cfg = cfg;
  f.seed = seed;
  f.data = data;
  f.trees.resize(M);
  Rng master(seed);
  parallel_for(M, [&](std::size_t m) {
    f.trees[m] = build_tree(data, cfg, master.derive("tree", m));
  });
  return f;
}

double forest_predict(const Forest& forest, std::span<const double> x) {
  if (forest.trees.empty()) throw std::invalid_argument("empty forest");
  KahanSum s;
  for (const Tree& t : forest.trees) s.add(tree_predict(t, forest.data, x));
  return s.value() / forest.size();
}

std::vector<double> forest_weights(const Forest& forest,
                                   std::span<const double> x) {
  if (forest.trees.empty()) throw std::invalid_argument("empty forest");
  std::vector<double> w(forest.data.size(), 0.0);
  for (const Tree& t : forest.trees) {
    const TreeNode& leaf = t.leaf_at(x);
    if (leaf.b == 0) continue;
    double share = 1.0 / leaf.b;
    for (std::int32_t i = 0; i < leaf.b; ++i) w[t.items[leaf.a + i]] += share;
  }
  double inv = 1.0 / forest.size();
  for (double& v : w) v *= inv;
  return w;
}

std::vector<PointStats> forest_point_stats(const TrainingSet& data,
                                           const BuilderConfig& cfg, int M,
                                           std::uint64_t seed,
                                           const PointSet& points) {
  if (M < 1) throw std::invalid_argument("forest_point_stats: M must be >= 1");
  if (points.dim != data.dim)
    throw std::invalid_argument("forest_point_stats: dimension mismatch");
  cfg.validate(data.dim, data.size());
  int P = points.size();
  int blocks = std::min(M, 256);
  std::vector<Welford> acc(static_cast<std::size_t>(blocks) * P);
  Rng master(seed);
  parallel_for(blocks, [&](std::size_t b) {
    int lo = static_cast<int>(b * M / blocks);
    int hi = static_cast<int>((b + 1) * M / blocks);
    Welford* w = acc.data() + b * P;
    for (int m = lo; m < hi; ++m) {
      Tree t = build_tree(data, cfg, master.derive("tree", m));
      for (int p = 0; p < P; ++p) w[p].add(t.leaf_at(points.point(p)).value);
    }
  });
  std::vector<PointStats> out(P);
  for (int p = 0; p < P; ++p) {
    Welford total;
    for (int b = 0; b < blocks; ++b)
      total.merge(acc[static_cast<std::size_t>(b) * P + p]);
    out[p].m = static_cast<int>(total.n);
    out[p].mean = total.mean;
    out[p].variance = total.variance();
    out[p].se_mean = total.n > 0 ? std::sqrt(out[p].variance / total.n) : 0.0;
  }
  return out;
}

VarianceEstimate theta_variance(const TrainingSet& data,
                                const BuilderConfig& cfg,
                                std::span<const double> x, int m_var,
                                std::uint64_t seed) {
  if (m_var < 2) throw std::invalid_argument("theta_variance: m_var >= 2");
  cfg.validate(data.dim, data.size());
  std::vector<double> preds(m_var);
  Rng master(seed);
  parallel_for(m_var, [&](std::size_t m) {
    Tree t = build_tree(data, cfg, master.derive("tree", m));
    preds[m] = t.leaf_at(x).value;
  });
  Moments mo = moments(preds);
  VarianceEstimate v;
  v.value = mo.variance;
  v.se = mo.se_variance;
  v.m = m_var;
  return v;
}

SigmaTildeCheck sigma_tilde_sq(const TrainingSet& data,
                               const BuilderConfig& cfg,
                               std::span<const double> x, int m_var,
                               std::uint64_t seed) {
  SigmaTildeCheck c;
  c.estimate = theta_variance(data, cfg, x, m_var, seed);
  double max_sq = 0.0;
  for (double y : data.ys) max_sq = std::max(max_sq, y * y);
  c.bound = 4.0 * max_sq;
  c.ok = c.estimate.value <= c.bound + 3.0 * c.estimate.se;
  return c;
}

}  // namespace rflab
