#include "rflab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rflab/parallel.hpp"
#include "rflab/stats.hpp"

namespace rflab {

namespace {

std::uint64_t sub_seed(const Rng& master, std::string_view tag,
                       std::uint64_t index = 0) {
  Rng r = master.derive(tag, index);
  return r.next_u64();
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

nlohmann::json base_config(const RegressionModel& model,
                           const BuilderConfig& cfg, std::uint64_t seed) {
  nlohmann::json j;
  j["model"] = model.tag();
  j["sigma"] = model.sigma;
  j["builder"] = cfg.describe();
  j["seed"] = seed;
  return j;
}

double mean_over(const std::vector<double>& v) {
  return compensated_mean({v.data(), v.size()});
}

}  // namespace

RiskEstimate estimate_risk(const RegressionModel& model,
                           const BuilderConfig& cfg, int n, int m,
                           int datasets, int test_points, std::uint64_t seed) {
  if (datasets < 1 || test_points < 1)
    throw std::invalid_argument("estimate_risk: datasets/test_points >= 1");
  if (m < 1) throw std::invalid_argument("estimate_risk: m >= 1");
  Rng master(seed);
  std::vector<double> errs;
  errs.reserve(static_cast<std::size_t>(datasets) * test_points);
  for (int r = 0; r < datasets; ++r) {
    TrainingSet data =
        sample_dataset(model, n, sub_seed(master, "dataset", r));
    PointSet pts =
        PointSet::sample(model, test_points, sub_seed(master, "test", r));
    std::vector<PointStats> st =
        forest_point_stats(data, cfg, m, sub_seed(master, "forest", r), pts);
    for (int t = 0; t < test_points; ++t) {
      double err = st[t].mean - model.mean_at(pts.point(t));
      errs.push_back(err * err);
    }
  }
  Moments mo = moments({errs.data(), errs.size()});
  RiskEstimate est;
  est.value = mo.mean;
  est.se = mo.se_mean;
  est.replicates = static_cast<long long>(errs.size());
  return est;
}

int trees_needed(double epsilon, double m_inf_norm, double sigma, int n) {
  if (epsilon <= 0.0) throw std::invalid_argument("trees_needed: epsilon > 0");
  if (n < 1) throw std::invalid_argument("trees_needed: n >= 1");
  double s2 = sigma * sigma;
  double t = (8.0 * (m_inf_norm * m_inf_norm + s2) +
              32.0 * s2 * std::log(static_cast<double>(n))) /
             epsilon;
  double m = std::ceil(t);
  return m < 1.0 ? 1 : static_cast<int>(m);
}

Report risk_gap_experiment(const RegressionModel& model,
                           const BuilderConfig& cfg, int n,
                           const std::vector<int>& m_list, int m_ref,
                           int datasets, int test_points, std::uint64_t seed) {
  Stopwatch clock;
  if (m_list.empty()) throw std::invalid_argument("risk_gap: empty m_list");
  int m_max = 0;
  for (int m : m_list) {
    if (m < 1) throw std::invalid_argument("risk_gap: every M >= 1");
    m_max = std::max(m_max, m);
  }
  if (m_ref < 100 * m_max)
    throw std::invalid_argument(
        "risk_gap: reference forest must have at least 100x the largest M (" +
        std::to_string(m_ref) + " < " + std::to_string(100 * m_max) + ")");
  if (datasets < 2)
    throw std::invalid_argument("risk_gap: datasets >= 2 (need an SE)");
  if (test_points < 1) throw std::invalid_argument("risk_gap: test_points >= 1");

  int K = static_cast<int>(m_list.size());
  int R = datasets;
  Rng master(seed);

  // Per-dataset statistics; clustering at the dataset level keeps the SEs
  // honest in the presence of within-dataset correlation.
  std::vector<std::vector<double>> finite_risk(K, std::vector<double>(R));
  std::vector<std::vector<double>> direct_gap(K, std::vector<double>(R));
  std::vector<std::vector<double>> residual(K, std::vector<double>(R));
  std::vector<double> ref_risk(R);      // bias-corrected reference risk
  std::vector<double> tree_var_bar(R);  // mean across-tree variance

  for (int r = 0; r < R; ++r) {
    TrainingSet data = sample_dataset(model, n, sub_seed(master, "dataset", r));
    PointSet pts =
        PointSet::sample(model, test_points, sub_seed(master, "test", r));
    std::vector<double> target(test_points);
    for (int t = 0; t < test_points; ++t)
      target[t] = model.mean_at(pts.point(t));

    std::vector<PointStats> ref =
        forest_point_stats(data, cfg, m_ref, sub_seed(master, "ref", r), pts);
    KahanSum ref_err, vbar;
    for (int t = 0; t < test_points; ++t) {
      double e = ref[t].mean - target[t];
      ref_err.add(e * e);
      vbar.add(ref[t].variance);
    }
    double v = vbar.value() / test_points;
    tree_var_bar[r] = v;
    // Remove the reference's own Monte Carlo noise, which inflates its
    // squared error by (mean tree variance) / m_ref.
    ref_risk[r] = ref_err.value() / test_points - v / m_ref;

    Rng fin_master = master.derive("finite", r);
    for (int k = 0; k < K; ++k) {
      std::vector<PointStats> fin = forest_point_stats(
          data, cfg, m_list[k], sub_seed(fin_master, "m", k), pts);
      KahanSum fin_err, gap;
      for (int t = 0; t < test_points; ++t) {
        double e = fin[t].mean - target[t];
        fin_err.add(e * e);
        double g = fin[t].mean - ref[t].mean;
        gap.add(g * g);
      }
      finite_risk[k][r] = fin_err.value() / test_points;
      // E (m_M - m_ref)^2 = V/M + V/m_ref for independent forests, so
      // subtracting the reference noise leaves an unbiased V/M estimate.
      direct_gap[k][r] = gap.value() / test_points - v / m_ref;
      residual[k][r] = finite_risk[k][r] - ref_risk[r] - v / m_list[k];
    }
  }

  Report rep;
  rep.tag = "risk_gap";
  rep.config = base_config(model, cfg, seed);
  rep.config["n"] = n;
  rep.config["m_list"] = m_list;
  rep.config["m_ref"] = m_ref;
  rep.config["datasets"] = datasets;
  rep.config["test_points"] = test_points;
  rep.columns = {"m",           "risk_finite",   "risk_finite_se",
                 "risk_ref",    "risk_ref_se",   "gap_direct",
                 "gap_direct_se", "gap_predicted", "residual",
                 "residual_se", "bound"};

  Moments ref_mo = moments({ref_risk.data(), ref_risk.size()});
  double vbar_all = mean_over(tree_var_bar);
  double envelope_scale =
      8.0 * (model.sup_norm() * model.sup_norm() +
             model.sigma * model.sigma *
                 (1.0 + 4.0 * std::log(static_cast<double>(n))));

  std::vector<double> log_m, log_gap;
  bool any_positive_gap = false;
  for (int k = 0; k < K; ++k) {
    Moments fin_mo =
        moments({finite_risk[k].data(), finite_risk[k].size()});
    Moments gap_mo = moments({direct_gap[k].data(), direct_gap[k].size()});
    Moments res_mo = moments({residual[k].data(), residual[k].size()});
    double bound = envelope_scale / m_list[k];
    rep.rows.push_back({static_cast<double>(m_list[k]), fin_mo.mean,
                        fin_mo.se_mean, ref_mo.mean, ref_mo.se_mean,
                        gap_mo.mean, gap_mo.se_mean, vbar_all / m_list[k],
                        res_mo.mean, res_mo.se_mean, bound});

    bool res_ok = std::abs(res_mo.mean) <= 3.0 * res_mo.se_mean;
    rep.add_verdict("residual_within_3se_m" + std::to_string(m_list[k]),
                    res_ok,
                    "|" + fmt17(res_mo.mean) + "| vs 3*" +
                        fmt17(res_mo.se_mean));
    bool bound_ok = gap_mo.mean <= bound;
    rep.add_verdict("gap_within_bound_m" + std::to_string(m_list[k]),
                    bound_ok, fmt17(gap_mo.mean) + " <= " + fmt17(bound));
    if (gap_mo.mean > 0.0) {
      any_positive_gap = true;
      log_m.push_back(std::log(static_cast<double>(m_list[k])));
      log_gap.push_back(std::log(gap_mo.mean));
    }
  }

  double max_gap = 0.0;
  for (int k = 0; k < K; ++k) max_gap = std::max(max_gap, std::abs(mean_over(direct_gap[k])));
  if (K >= 2 && any_positive_gap && log_m.size() == static_cast<std::size_t>(K)) {
    LineFit fit = fit_line({log_m.data(), log_m.size()},
                           {log_gap.data(), log_gap.size()});
    bool slope_ok = fit.slope >= -1.15 && fit.slope <= -0.85;
    rep.add_verdict("gap_slope_near_minus_one", slope_ok,
                    "slope " + fmt17(fit.slope) + " target [-1.15,-0.85]");
  } else if (max_gap < 1e-15) {
    rep.add_verdict("gap_slope_near_minus_one", true,
                    "degenerate: gap is zero at every M");
  } else {
    rep.add_verdict("gap_slope_near_minus_one", false,
                    "gap not positive at every M; no slope");
  }

  rep.wall_seconds = clock.seconds();
  return rep;
}

Report clt_experiment(const RegressionModel& model, const BuilderConfig& cfg,
                      int n, int x_points, int m, int replicates, int m_ref,
                      std::uint64_t seed) {
  Stopwatch clock;
  if (replicates < 200)
    throw std::invalid_argument("clt: replicates >= 200");
  if (x_points < 1) throw std::invalid_argument("clt: x_points >= 1");
  if (m < 2) throw std::invalid_argument("clt: m >= 2");
  if (m_ref < 100 * m)
    throw std::invalid_argument("clt: reference needs at least 100x M trees");

  constexpr double kKsMax = 0.06;
  constexpr double kKsFrac = 0.9;
  constexpr double kVarTol = 0.2;
  constexpr double kVarFrac = 0.8;

  Rng master(seed);
  TrainingSet data = sample_dataset(model, n, sub_seed(master, "dataset", 0));
  PointSet pts =
      PointSet::sample(model, x_points, sub_seed(master, "query", 0));
  std::vector<PointStats> ref =
      forest_point_stats(data, cfg, m_ref, sub_seed(master, "ref", 0), pts);

  // raw[p][i] = sqrt(M) * (m_M - m_ref) for replicate i at point p.
  std::vector<std::vector<double>> raw(
      x_points, std::vector<double>(replicates, 0.0));
  double root_m = std::sqrt(static_cast<double>(m));
  for (int i = 0; i < replicates; ++i) {
    std::vector<PointStats> fin =
        forest_point_stats(data, cfg, m, sub_seed(master, "replicate", i), pts);
    for (int p = 0; p < x_points; ++p)
      raw[p][i] = root_m * (fin[p].mean - ref[p].mean);
  }

  Report rep;
  rep.tag = "clt";
  rep.config = base_config(model, cfg, seed);
  rep.config["n"] = n;
  rep.config["x_points"] = x_points;
  rep.config["m"] = m;
  rep.config["replicates"] = replicates;
  rep.config["m_ref"] = m_ref;
  rep.config["ks_threshold"] = kKsMax;
  rep.config["variance_ratio_tolerance"] = kVarTol;
  rep.columns = {"point",      "sigma_tilde_sq", "ks_distance",
                 "var_ratio",  "skipped"};

  int live = 0, ks_ok = 0, var_ok = 0, skipped = 0;
  for (int p = 0; p < x_points; ++p) {
    double stsq = ref[p].variance;
    if (stsq <= 0.0) {
      ++skipped;
      rep.rows.push_back({static_cast<double>(p), stsq,
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(), 1.0});
      continue;
    }
    ++live;
    double st = std::sqrt(stsq);
    std::vector<double> z(replicates);
    for (int i = 0; i < replicates; ++i) z[i] = raw[p][i] / st;
    double ks = ks_normal({z.data(), z.size()});
    Moments mo = moments({raw[p].data(), raw[p].size()});
    double ratio = mo.variance / stsq;
    if (ks < kKsMax) ++ks_ok;
    if (std::abs(ratio - 1.0) <= kVarTol) ++var_ok;
    rep.rows.push_back(
        {static_cast<double>(p), stsq, ks, ratio, 0.0});
  }

  if (live == 0) {
    rep.add_verdict("ks_close_to_normal", true,
                    "all points degenerate (zero tree variance)");
    rep.add_verdict("replicate_variance_matches", true,
                    "all points degenerate (zero tree variance)");
  } else {
    rep.add_verdict("ks_close_to_normal",
                    ks_ok >= static_cast<int>(std::ceil(kKsFrac * live)),
                    std::to_string(ks_ok) + "/" + std::to_string(live) +
                        " points with KS < " + fmt17(kKsMax));
    rep.add_verdict("replicate_variance_matches",
                    var_ok >= static_cast<int>(std::ceil(kVarFrac * live)),
                    std::to_string(var_ok) + "/" + std::to_string(live) +
                        " points within " + fmt17(kVarTol) + " of 1");
  }
  if (skipped > 0)
    rep.add_verdict("degenerate_points_noted", true,
                    std::to_string(skipped) + " points skipped");

  rep.wall_seconds = clock.seconds();
  return rep;
}

Report sup_convergence_experiment(const RegressionModel& model,
                                  const BuilderConfig& cfg, int n,
                                  int grid_resolution,
                                  const std::vector<int>& m_list, int m_ref,
                                  std::uint64_t seed) {
  Stopwatch clock;
  if (m_list.empty()) throw std::invalid_argument("sup_conv: empty m_list");
  int m_max = 0;
  for (int m : m_list) {
    if (m < 1) throw std::invalid_argument("sup_conv: every M >= 1");
    m_max = std::max(m_max, m);
  }
  if (m_ref < 20 * m_max)
    throw std::invalid_argument(
        "sup_conv: reference forest must have at least 20x the largest M");

  Rng master(seed);
  TrainingSet data = sample_dataset(model, n, sub_seed(master, "dataset", 0));
  PointSet grid = PointSet::lattice(model.dim, grid_resolution);
  int P = grid.size();
  std::vector<PointStats> ref =
      forest_point_stats(data, cfg, m_ref, sub_seed(master, "ref", 0), grid);
  double sigma_max = 0.0;
  for (int p = 0; p < P; ++p)
    sigma_max = std::max(sigma_max, std::sqrt(ref[p].variance));

  Report rep;
  rep.tag = "sup_convergence";
  rep.config = base_config(model, cfg, seed);
  rep.config["n"] = n;
  rep.config["grid_resolution"] = grid_resolution;
  rep.config["grid_points"] = P;
  rep.config["m_list"] = m_list;
  rep.config["m_ref"] = m_ref;
  rep.columns = {"m", "sup_abs_diff", "argmax_point", "sigma_max", "joint_se"};

  int K = static_cast<int>(m_list.size());
  std::vector<double> sups(K);
  for (int k = 0; k < K; ++k) {
    std::vector<PointStats> fin = forest_point_stats(
        data, cfg, m_list[k], sub_seed(master, "finite", k), grid);
    double sup = 0.0;
    int arg = 0;
    for (int p = 0; p < P; ++p) {
      double d = std::abs(fin[p].mean - ref[p].mean);
      if (d > sup) {
        sup = d;
        arg = p;
      }
    }
    sups[k] = sup;
    double joint =
        sigma_max * (1.0 / std::sqrt(static_cast<double>(m_list[k])) +
                     2.0 / std::sqrt(static_cast<double>(m_ref)));
    rep.rows.push_back({static_cast<double>(m_list[k]), sup,
                        static_cast<double>(arg), sigma_max, joint});
  }

  bool monotone = true;
  std::string detail;
  for (int k = 0; k + 1 < K; ++k) {
    double joint =
        sigma_max * (1.0 / std::sqrt(static_cast<double>(m_list[k])) +
                     1.0 / std::sqrt(static_cast<double>(m_list[k + 1])) +
                     2.0 / std::sqrt(static_cast<double>(m_ref)));
    if (sups[k + 1] > sups[k] + 2.0 * joint) {
      monotone = false;
      detail = "sup rose from " + fmt17(sups[k]) + " to " +
               fmt17(sups[k + 1]) + " between M=" + std::to_string(m_list[k]) +
               " and M=" + std::to_string(m_list[k + 1]);
    }
  }
  rep.add_verdict("sup_non_increasing", monotone,
                  monotone ? "within 2 joint SE at every step" : detail);

  bool all_positive = true;
  for (double s : sups) all_positive = all_positive && s > 0.0;
  if (K >= 2 && all_positive) {
    std::vector<double> lx(K), ly(K);
    for (int k = 0; k < K; ++k) {
      lx[k] = std::log(static_cast<double>(m_list[k]));
      ly[k] = std::log(sups[k]);
    }
    LineFit fit = fit_line({lx.data(), lx.size()}, {ly.data(), ly.size()});
    bool ok = fit.slope >= -0.7 && fit.slope <= -0.3;
    rep.add_verdict("sup_slope_near_minus_half", ok,
                    "slope " + fmt17(fit.slope) + " target [-0.7,-0.3]");
  } else if (sigma_max == 0.0) {
    rep.add_verdict("sup_slope_near_minus_half", true,
                    "degenerate: all tree predictions identical");
  } else {
    rep.add_verdict("sup_slope_near_minus_half", false,
                    "sup not positive at every M; no slope");
  }

  rep.wall_seconds = clock.seconds();
  return rep;
}

namespace {

BuilderConfig scheduled_builder(BuilderKind kind, int n, double q) {
  BuilderConfig cfg;
  cfg.kind = kind;
  if (kind == BuilderKind::Uniform) {
    cfg.uniform.levels =
        static_cast<int>(std::floor(std::log2(static_cast<double>(n)) / 2.0));
  } else if (kind == BuilderKind::Quantile) {
    cfg.quantile.q = q;
    cfg.quantile.subsample = static_cast<int>(
        std::ceil(std::pow(static_cast<double>(n), 2.0 / 3.0)));
  } else {
    throw std::invalid_argument(
        "consistency_sweep: builder must be uniform or quantile");
  }
  return cfg;
}

}  // namespace

Report consistency_sweep(const RegressionModel& model, BuilderKind builder,
                         const std::vector<int>& n_list, int m, int datasets,
                         int test_points, std::uint64_t seed) {
  Stopwatch clock;
  if (n_list.size() < 2)
    throw std::invalid_argument("consistency_sweep: need >= 2 sample sizes");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw std::invalid_argument("consistency_sweep: n_list must increase");
  if (datasets < 2)
    throw std::invalid_argument("consistency_sweep: datasets >= 2");
  if (m < 1 || test_points < 1)
    throw std::invalid_argument("consistency_sweep: m/test_points >= 1");
  bool quantile = builder == BuilderKind::Quantile;
  const double q = 0.8;

  Rng master(seed);
  Report rep;
  rep.tag = "consistency";
  BuilderConfig probe = scheduled_builder(builder, n_list.front(), q);
  rep.config = base_config(model, probe, seed);
  rep.config["builder"] =
      quantile ? "quantile(scheduled)" : "uniform(scheduled)";
  rep.config["n_list"] = n_list;
  rep.config["m"] = m;
  rep.config["datasets"] = datasets;
  rep.config["test_points"] = test_points;
  rep.columns = {"n",  "schedule_param", "m",  "risk",
                 "se", "datasets",       "test_points"};

  int N = static_cast<int>(n_list.size());
  std::vector<double> risk(N), se(N);
  std::vector<double> tree_risk(N), tree_se(N);
  for (int i = 0; i < N; ++i) {
    int n = n_list[i];
    BuilderConfig cfg = scheduled_builder(builder, n, q);
    Rng stream = master.derive("n", static_cast<std::uint64_t>(n));
    std::vector<double> by_dataset(datasets), by_dataset_tree(datasets);
    for (int r = 0; r < datasets; ++r) {
      TrainingSet data =
          sample_dataset(model, n, sub_seed(stream, "dataset", r));
      PointSet pts =
          PointSet::sample(model, test_points, sub_seed(stream, "test", r));
      std::vector<PointStats> st = forest_point_stats(
          data, cfg, m, sub_seed(stream, "forest", r), pts);
      KahanSum err2, err2_tree;
      std::vector<PointStats> one;
      if (quantile)
        one = forest_point_stats(data, cfg, 1,
                                 sub_seed(stream, "single_tree", r), pts);
      for (int t = 0; t < test_points; ++t) {
        double target = model.mean_at(pts.point(t));
        double e = st[t].mean - target;
        err2.add(e * e);
        if (quantile) {
          double et = one[t].mean - target;
          err2_tree.add(et * et);
        }
      }
      by_dataset[r] = err2.value() / test_points;
      if (quantile) by_dataset_tree[r] = err2_tree.value() / test_points;
    }
    Moments mo = moments({by_dataset.data(), by_dataset.size()});
    risk[i] = mo.mean;
    se[i] = mo.se_mean;
    double sched = builder == BuilderKind::Uniform
                       ? scheduled_builder(builder, n, q).uniform.levels
                       : scheduled_builder(builder, n, q).quantile.subsample;
    rep.row_labels.push_back(quantile ? "quantile_forest" : "uniform_forest");
    rep.rows.push_back({static_cast<double>(n), sched, static_cast<double>(m),
                        risk[i], se[i], static_cast<double>(datasets),
                        static_cast<double>(test_points)});
    if (quantile) {
      Moments mt = moments({by_dataset_tree.data(), by_dataset_tree.size()});
      tree_risk[i] = mt.mean;
      tree_se[i] = mt.se_mean;
      rep.row_labels.push_back("quantile_tree");
      rep.rows.push_back({static_cast<double>(n), sched, 1.0, tree_risk[i],
                          tree_se[i], static_cast<double>(datasets),
                          static_cast<double>(test_points)});
    }
  }

  double joint = 2.0 * std::sqrt(se.front() * se.front() +
                                 se.back() * se.back());
  bool falls = risk.back() < risk.front() - joint;
  rep.add_verdict("risk_decreases_with_n", falls,
                  fmt17(risk.back()) + " vs " + fmt17(risk.front()) +
                      " - 2*joint_se " + fmt17(joint / 2.0));
  if (quantile) {
    double jt = 2.0 * std::sqrt(tree_se.back() * tree_se.back() +
                                se.back() * se.back());
    bool stays = tree_risk.back() - risk.back() > jt;
    rep.add_verdict("single_tree_stays_inconsistent", stays,
                    "tree " + fmt17(tree_risk.back()) + " vs forest " +
                        fmt17(risk.back()) + " at n=" +
                        std::to_string(n_list.back()));
  }

  rep.wall_seconds = clock.seconds();
  return rep;
}

Report stone_diagnostics(const RegressionModel& model,
                         const BuilderConfig& cfg, int n, int m, int x_points,
                         std::uint64_t seed) {
  Stopwatch clock;
  if (cfg.kind != BuilderKind::Quantile)
    throw std::invalid_argument("stone_diagnostics: quantile builder only");
  if (m < 1 || x_points < 1 || n < 3)
    throw std::invalid_argument("stone_diagnostics: bad m/x_points/n");
  cfg.validate(model.dim, n);
  int a_n = cfg.quantile.subsample == 0 ? n : cfg.quantile.subsample;

  const std::vector<double> gammas = {0.1, 0.2, 0.3, 0.5, 0.7, 0.9};
  const std::vector<double> dists = {0.05, 0.1, 0.2, 0.4};

  Rng master(seed);
  TrainingSet data = sample_dataset(model, n, sub_seed(master, "dataset", 0));
  PointSet pts =
      PointSet::sample(model, x_points, sub_seed(master, "query", 0));

  int P = x_points;
  std::vector<KahanSum> weight_sum(P);
  std::vector<std::vector<int>> conn(P, std::vector<int>(n, 0));
  std::vector<std::vector<long long>> diam_count(
      P, std::vector<long long>(gammas.size(), 0));
  std::vector<std::vector<KahanSum>> mass(P,
                                          std::vector<KahanSum>(dists.size()));

  double inv_m = 1.0 / m;
  // Trees are streamed one at a time in index order; memory stays flat and
  // the totals cannot depend on threading.
  for (int t = 0; t < m; ++t) {
    Tree tree = build_tree(data, cfg, master.derive("tree", t));
    for (int p = 0; p < P; ++p) {
      std::span<const double> x = pts.point(p);
      Cell cell = leaf_cell_of(tree, x);
      const TreeNode& leaf = tree.leaf_at(x);
      if (leaf.b > 0) weight_sum[p].add(inv_m);
      double diam = cell.diameter();
      for (std::size_t g = 0; g < gammas.size(); ++g)
        diam_count[p][g] += diam > gammas[g];
      double share = leaf.b > 0 ? 1.0 / leaf.b : 0.0;
      for (std::int32_t e = 0; e < leaf.b; ++e) {
        std::uint32_t i = tree.items[leaf.a + e];
        ++conn[p][i];
        std::span<const double> xi = data.point(static_cast<int>(i));
        double dist = 0.0;
        for (int j = 0; j < data.dim; ++j)
          dist = std::max(dist, std::abs(x[j] - xi[j]));
        for (std::size_t a = 0; a < dists.size(); ++a)
          if (dist > dists[a]) mass[p][a].add(share * inv_m);
      }
    }
  }

  Report rep;
  rep.tag = "stone_diagnostics";
  rep.config = base_config(model, cfg, seed);
  rep.config["n"] = n;
  rep.config["subsample"] = a_n;
  rep.config["m"] = m;
  rep.config["x_points"] = x_points;
  rep.columns = {"point", "weight_sum", "weight_sum_exact", "max_conn_freq",
                 "conn_bound"};
  for (double g : gammas) rep.columns.push_back("diam_gt_" + fmt17(g));
  for (double a : dists) rep.columns.push_back("mass_gt_" + fmt17(a));

  bool all_exact = true;
  bool all_bounded = true;
  double freq_bound = static_cast<double>(a_n) / n;
  for (int p = 0; p < P; ++p) {
    double ws = weight_sum[p].value();
    bool exact = ws == 1.0;
    all_exact = all_exact && exact;
    int max_count = 0;
    for (int i = 0; i < n; ++i) max_count = std::max(max_count, conn[p][i]);
    double freq = static_cast<double>(max_count) / m;
    double freq_se = proportion_se(freq, static_cast<std::size_t>(m));
    bool bounded = freq <= freq_bound + 3.0 * freq_se;
    all_bounded = all_bounded && bounded;
    std::vector<double> row = {static_cast<double>(p), ws, exact ? 1.0 : 0.0,
                               freq, freq_bound};
    for (std::size_t g = 0; g < gammas.size(); ++g)
      row.push_back(static_cast<double>(diam_count[p][g]) / m);
    for (std::size_t a = 0; a < dists.size(); ++a)
      row.push_back(mass[p][a].value());
    rep.rows.push_back(std::move(row));
  }

  rep.add_verdict("weight_sums_exactly_one", all_exact,
                  all_exact ? "all " + std::to_string(P) + " points exact"
                            : "some points off 1.0");
  rep.add_verdict("max_connection_frequency_bounded", all_bounded,
                  "bound subsample/n = " + fmt17(freq_bound) + " + 3 SE");
  rep.wall_seconds = clock.seconds();
  return rep;
}

Report uniform_side_length_check(int d, int k, int trials,
                                 std::uint64_t seed) {
  Stopwatch clock;
  if (d < 1 || k < 0) throw std::invalid_argument("side_length: bad d/k");
  if (trials < 2) throw std::invalid_argument("side_length: trials >= 2");

  // Fixed blocks of Welford accumulators (side and dominating chain per
  // coordinate), merged in block order.
  int blocks = std::min(trials, 256);
  std::vector<Welford> acc_side(static_cast<std::size_t>(blocks) * d);
  std::vector<Welford> acc_dom(static_cast<std::size_t>(blocks) * d);
  Rng master(seed);
  parallel_for(blocks, [&](std::size_t b) {
    long long lo = static_cast<long long>(b) * trials / blocks;
    long long hi = static_cast<long long>(b + 1) * trials / blocks;
    Welford* ws = acc_side.data() + b * d;
    Welford* wd = acc_dom.data() + b * d;
    std::vector<double> clo(d), chi(d), dom(d), x(d);
    for (long long t = lo; t < hi; ++t) {
      Rng r = master.derive("trial", static_cast<std::uint64_t>(t));
      for (int j = 0; j < d; ++j) {
        x[j] = r.next_double();
        clo[j] = 0.0;
        chi[j] = 1.0;
        dom[j] = 1.0;
      }
      for (int level = 0; level < k; ++level) {
        int j = static_cast<int>(r.next_below(d));
        double u = r.next_double();
        double pos = clo[j] + u * (chi[j] - clo[j]);
        if (x[j] < pos)
          chi[j] = pos;
        else
          clo[j] = pos;
        dom[j] *= std::max(u, 1.0 - u);
      }
      for (int j = 0; j < d; ++j) {
        ws[j].add(chi[j] - clo[j]);
        wd[j].add(dom[j]);
      }
    }
  });

  double analytic = std::pow(1.0 - 1.0 / (4.0 * d), k);
  Report rep;
  rep.tag = "side_length";
  rep.config["d"] = d;
  rep.config["k"] = k;
  rep.config["trials"] = trials;
  rep.config["seed"] = seed;
  rep.config["analytic"] = analytic;
  rep.columns = {"coordinate",    "side_mean", "side_se", "dominating_mean",
                 "dominating_se", "analytic"};

  bool bound_ok = true, tight_ok = true;
  for (int j = 0; j < d; ++j) {
    Welford side, dom;
    for (int b = 0; b < blocks; ++b) {
      side.merge(acc_side[static_cast<std::size_t>(b) * d + j]);
      dom.merge(acc_dom[static_cast<std::size_t>(b) * d + j]);
    }
    double side_se = std::sqrt(side.variance() / side.n);
    double dom_se = std::sqrt(dom.variance() / dom.n);
    rep.rows.push_back({static_cast<double>(j + 1), side.mean, side_se,
                        dom.mean, dom_se, analytic});
    bound_ok = bound_ok && side.mean <= analytic + 3.0 * side_se;
    tight_ok = tight_ok && std::abs(dom.mean - analytic) <= 3.0 * dom_se;
  }
  rep.add_verdict("side_within_analytic_bound", bound_ok,
                  "mean side <= " + fmt17(analytic) + " + 3 SE per coordinate");
  rep.add_verdict("dominating_chain_matches_analytic", tight_ok,
                  "per-cut max(U,1-U) chain equals " + fmt17(analytic) +
                      " within 3 SE");
  rep.wall_seconds = clock.seconds();
  return rep;
}

}  // namespace rflab
