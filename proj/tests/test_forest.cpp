#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rflab/forest.hpp"
#include "rflab/parallel.hpp"
#include "rflab/stats.hpp"

using namespace rflab;

namespace {

struct HintGuard {
  ~HintGuard() { set_thread_hint(0); }
};

BuilderConfig uniform_cfg(int levels) {
  BuilderConfig cfg;
  cfg.kind = BuilderKind::Uniform;
  cfg.uniform.levels = levels;
  return cfg;
}

BuilderConfig quantile_cfg(int subsample) {
  BuilderConfig cfg;
  cfg.kind = BuilderKind::Quantile;
  cfg.quantile.subsample = subsample;
  return cfg;
}

}  // namespace

TEST_CASE("point sets cover their domains") {
  PointSet g = PointSet::grid1d(5);
  CHECK(g.size() == 5);
  CHECK(g.xs == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

  PointSet l = PointSet::lattice(2, 3);
  CHECK(l.dim == 2);
  CHECK(l.size() == 9);

  RegressionModel m = parse_model("sines", 3, 0.0, "uniform");
  PointSet s = PointSet::sample(m, 17, 5);
  CHECK(s.dim == 3);
  CHECK(s.size() == 17);
  PointSet s2 = PointSet::sample(m, 17, 5);
  CHECK(s.xs == s2.xs);
}

TEST_CASE("forest prediction is the mean of its trees") {
  RegressionModel m = parse_model("sines", 1, 0.2, "uniform");
  TrainingSet data = sample_dataset(m, 60, 21);
  Forest f = grow_forest(data, uniform_cfg(3), 40, 99);
  CHECK(f.size() == 40);
  std::vector<double> x = {0.37};
  KahanSum s;
  for (const Tree& t : f.trees) s.add(tree_predict(t, data, x));
  CHECK(forest_predict(f, x) ==
        doctest::Approx(s.value() / 40).epsilon(1e-13));
}

TEST_CASE("forest prediction equals the weight inner product") {
  RegressionModel m = parse_model("linear", 2, 0.5, "uniform");
  TrainingSet data = sample_dataset(m, 50, 8);
  for (const BuilderConfig& cfg : {uniform_cfg(2), quantile_cfg(25)}) {
    Forest f = grow_forest(data, cfg, 30, 4);
    std::vector<double> x = {0.62, 0.21};
    std::vector<double> w = forest_weights(f, x);
    REQUIRE(w.size() == 50);
    double dot = 0.0;
    for (int i = 0; i < 50; ++i) dot += w[i] * data.ys[i];
    CHECK(forest_predict(f, x) == doctest::Approx(dot).epsilon(1e-10));
  }
}

TEST_CASE("single-tree forest equals the tree") {
  RegressionModel m = parse_model("step", 1, 0.1, "uniform");
  TrainingSet data = sample_dataset(m, 30, 2);
  Forest f = grow_forest(data, quantile_cfg(10), 1, 7);
  std::vector<double> x = {0.8};
  CHECK(forest_predict(f, x) == tree_predict(f.trees[0], data, x));
}

TEST_CASE("quantile forest weights sum to exactly one") {
  RegressionModel m = parse_model("sines", 2, 0.3, "uniform");
  TrainingSet data = sample_dataset(m, 40, 13);
  Forest f = grow_forest(data, quantile_cfg(20), 64, 3);
  Rng probe(55);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> x = {probe.next_double(), probe.next_double()};
    std::vector<double> w = forest_weights(f, x);
    KahanSum s;
    for (double v : w) s.add(v);
    CHECK(s.value() == 1.0);
  }
}

TEST_CASE("grown forests are identical under any thread hint") {
  HintGuard guard;
  RegressionModel m = parse_model("sines", 2, 0.4, "uniform");
  TrainingSet data = sample_dataset(m, 80, 17);
  PointSet pts = PointSet::sample(m, 25, 9);

  set_thread_hint(1);
  Forest f1 = grow_forest(data, quantile_cfg(30), 50, 77);
  std::vector<PointStats> s1 =
      forest_point_stats(data, quantile_cfg(30), 200, 31, pts);

  set_thread_hint(7);
  Forest f7 = grow_forest(data, quantile_cfg(30), 50, 77);
  std::vector<PointStats> s7 =
      forest_point_stats(data, quantile_cfg(30), 200, 31, pts);

  for (int p = 0; p < pts.size(); ++p) {
    CHECK(s1[p].mean == s7[p].mean);
    CHECK(s1[p].variance == s7[p].variance);
  }
  for (int t = 0; t < 50; ++t) {
    REQUIRE(f1.trees[t].nodes.size() == f7.trees[t].nodes.size());
    CHECK(f1.trees[t].items == f7.trees[t].items);
  }
}

TEST_CASE("streamed point stats agree with a materialized forest") {
  RegressionModel m = parse_model("linear", 1, 0.2, "uniform");
  TrainingSet data = sample_dataset(m, 50, 3);
  PointSet pts = PointSet::grid1d(9);
  const int M = 120;
  std::vector<PointStats> st =
      forest_point_stats(data, uniform_cfg(3), M, 42, pts);
  Forest f = grow_forest(data, uniform_cfg(3), M, 42);
  REQUIRE(static_cast<int>(st.size()) == pts.size());
  for (int p = 0; p < pts.size(); ++p) {
    CHECK(st[p].m == M);
    CHECK(st[p].mean ==
          doctest::Approx(forest_predict(f, pts.point(p))).epsilon(1e-12));
    std::vector<double> preds(M);
    for (int t = 0; t < M; ++t)
      preds[t] = tree_predict(f.trees[t], data, pts.point(p));
    Moments mm = moments(preds);
    CHECK(st[p].variance == doctest::Approx(mm.variance).epsilon(1e-10));
    CHECK(st[p].se_mean ==
          doctest::Approx(std::sqrt(mm.variance / M)).epsilon(1e-10));
  }
}

TEST_CASE("tree-variance estimate is zero for a constant response") {
  RegressionModel m = parse_model("constant", 1, 0.0, "uniform");
  TrainingSet data = sample_dataset(m, 30, 1);
  std::vector<double> x = {0.5};
  VarianceEstimate v = theta_variance(data, quantile_cfg(10), x, 300, 5);
  CHECK(v.m == 300);
  CHECK(v.value <= 1e-25);

  // Same seed, same estimate, bit for bit.
  VarianceEstimate v2 = theta_variance(data, quantile_cfg(10), x, 300, 5);
  CHECK(v.value == v2.value);
  CHECK(v.se == v2.se);
}

TEST_CASE("tree variance respects its response envelope") {
  RegressionModel m = parse_model("sines", 1, 0.5, "uniform");
  TrainingSet data = sample_dataset(m, 100, 19);
  std::vector<double> x = {0.31};
  SigmaTildeCheck c = sigma_tilde_sq(data, uniform_cfg(4), x, 500, 23);
  double max_y2 = 0.0;
  for (double y : data.ys) max_y2 = std::max(max_y2, y * y);
  CHECK(c.bound == doctest::Approx(4.0 * max_y2).epsilon(1e-15));
  CHECK(c.ok);
  CHECK(c.estimate.value >= 0.0);
}

TEST_CASE("forests copy their training data") {
  RegressionModel m = parse_model("sines", 1, 0.0, "uniform");
  TrainingSet data = sample_dataset(m, 20, 11);
  Forest f = grow_forest(data, uniform_cfg(2), 5, 1);
  data.ys.assign(20, -100.0);  // mutate the caller's copy
  std::vector<double> x = {0.5};
  CHECK(std::abs(forest_predict(f, x)) <= 1.0);  // unaffected by the mutation
}
