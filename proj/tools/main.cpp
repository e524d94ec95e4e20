#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rflab/connection.hpp"
#include "rflab/rng.hpp"
#include "rflab/experiments.hpp"
#include "rflab/parallel.hpp"
#include "rflab/report.hpp"

namespace {

using namespace rflab;

struct CommonOpts {
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = leave to RFA_THREADS / single thread
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "master seed")->capture_default_str();
  cmd->add_option("--threads", c.threads,
                  "worker thread hint (overrides RFA_THREADS)")
      ->capture_default_str();
}

struct ModelOpts {
  std::string mean = "sines";
  int d = 1;
  double sigma = 0.0;
  std::string xdist = "uniform";
};

void add_model(CLI::App* cmd, ModelOpts& m) {
  cmd->add_option("--model", m.mean, "mean function: constant|linear|sines|step")
      ->capture_default_str();
  cmd->add_option("--d", m.d, "dimension")->capture_default_str();
  cmd->add_option("--sigma", m.sigma, "noise standard deviation")
      ->capture_default_str();
  cmd->add_option("--xdist", m.xdist, "design distribution: uniform|mixture")
      ->capture_default_str();
}

struct BuilderOpts {
  std::string builder = "uniform";
  int k = 3;
  double q = 0.8;
  int a_n = 0;
  double fixed_qn = -1.0;
  int mtry = 0;
  int nodesize = 5;
  std::string resample = "none";
  int resample_n = 0;
};

void add_builder(CLI::App* cmd, BuilderOpts& b, bool with_kind = true) {
  if (with_kind)
    cmd->add_option("--builder", b.builder,
                    "partition builder: uniform|quantile|breiman")
        ->capture_default_str();
  cmd->add_option("--k", b.k, "uniform partition depth")->capture_default_str();
  cmd->add_option("--q", b.q, "quantile range parameter, in [1/2,1)")
      ->capture_default_str();
  cmd->add_option("--a-n", b.a_n, "quantile subsample size (0 = use all)")
      ->capture_default_str();
  cmd->add_option("--fixed-qn", b.fixed_qn,
                  "fixed split quantile (< 0 draws one per split)")
      ->capture_default_str();
  cmd->add_option("--mtry", b.mtry, "CART dimensions per split (0 = all)")
      ->capture_default_str();
  cmd->add_option("--nodesize", b.nodesize, "CART leaf size cutoff")
      ->capture_default_str();
  cmd->add_option("--resample", b.resample,
                  "CART resampling: none|subsample|bootstrap")
      ->capture_default_str();
  cmd->add_option("--resample-n", b.resample_n, "CART subsample size")
      ->capture_default_str();
}

BuilderConfig to_config(const BuilderOpts& b) {
  BuilderConfig cfg;
  if (b.builder == "uniform") {
    cfg.kind = BuilderKind::Uniform;
    cfg.uniform.levels = b.k;
  } else if (b.builder == "quantile") {
    cfg.kind = BuilderKind::Quantile;
    cfg.quantile.q = b.q;
    cfg.quantile.subsample = b.a_n;
    cfg.quantile.fixed_qn = b.fixed_qn;
  } else if (b.builder == "breiman") {
    cfg.kind = BuilderKind::Breiman;
    cfg.breiman.mtry = b.mtry;
    cfg.breiman.nodesize = b.nodesize;
    cfg.breiman.subsample = b.resample_n;
    if (b.resample == "none")
      cfg.breiman.resample = Resample::None;
    else if (b.resample == "subsample")
      cfg.breiman.resample = Resample::Subsample;
    else if (b.resample == "bootstrap")
      cfg.breiman.resample = Resample::Bootstrap;
    else
      throw std::invalid_argument("unknown resample '" + b.resample + "'");
  } else {
    throw std::invalid_argument("unknown builder '" + b.builder + "'");
  }
  return cfg;
}

// Writes config.json plus <tag>.csv / <tag>.json, prints the one-line status,
// and converts the verdicts into the process exit code.
int finish(const std::string& command, const CommonOpts& common, Report rep) {
  if (common.threads > 0) set_thread_hint(common.threads);
  nlohmann::json echo;
  echo["command"] = command;
  echo["out"] = common.out;
  echo["seed"] = common.seed;
  echo["threads_hint"] = thread_hint();
  echo["experiment"] = rep.config;
  write_text_atomic(
      (std::filesystem::path(common.out) / "config.json").string(),
      echo.dump(2) + "\n");
  write_report(common.out, rep);
  int passed = 0;
  for (const auto& v : rep.verdicts) passed += v.pass;
  std::printf("%s: %d/%zu verdicts pass (%.2f s) -> %s\n", rep.tag.c_str(),
              passed, rep.verdicts.size(), rep.wall_seconds, common.out.c_str());
  for (const auto& v : rep.verdicts)
    if (!v.pass)
      std::printf("  FAIL %s: %s\n", v.name.c_str(), v.detail.c_str());
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-forest regression laboratory"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file, one [section] per command");

  int exit_code = 0;

  // ---- gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Sample a dataset to CSV + JSON");
  auto gen_common = std::make_shared<CommonOpts>();
  auto gen_model = std::make_shared<ModelOpts>();
  auto gen_n = std::make_shared<int>(100);
  add_common(gen, *gen_common);
  add_model(gen, *gen_model);
  gen->add_option("--n", *gen_n, "sample size")->capture_default_str();
  gen->callback([=, &exit_code] {
    if (gen_common->threads > 0) set_thread_hint(gen_common->threads);
    RegressionModel model = parse_model(gen_model->mean, gen_model->d,
                                        gen_model->sigma, gen_model->xdist);
    TrainingSet data = sample_dataset(model, *gen_n, gen_common->seed);
    write_dataset(gen_common->out, "dataset", data, model);
    nlohmann::json echo;
    echo["command"] = "gen";
    echo["out"] = gen_common->out;
    echo["seed"] = gen_common->seed;
    echo["threads_hint"] = thread_hint();
    echo["model"] = model.tag();
    echo["n"] = *gen_n;
    write_text_atomic(
        (std::filesystem::path(gen_common->out) / "config.json").string(),
        echo.dump(2) + "\n");
    std::printf("dataset: %d rows (%s) -> %s\n", data.size(),
                model.tag().c_str(), gen_common->out.c_str());
    exit_code = 0;
  });

  // ---- connect ------------------------------------------------------------
  auto* conn = app.add_subcommand(
      "connect", "Estimate the same-cell probability for a point pair");
  auto cn_common = std::make_shared<CommonOpts>();
  auto cn_model = std::make_shared<ModelOpts>();
  auto cn_builder = std::make_shared<BuilderOpts>();
  auto cn_n = std::make_shared<int>(0);
  auto cn_trials = std::make_shared<int>(100000);
  auto cn_x = std::make_shared<std::vector<double>>();
  auto cn_z = std::make_shared<std::vector<double>>();
  add_common(conn, *cn_common);
  add_model(conn, *cn_model);
  add_builder(conn, *cn_builder);
  conn->add_option("--n", *cn_n,
                   "training size (data-dependent builders only)")
      ->capture_default_str();
  conn->add_option("--trees,--trials", *cn_trials, "Monte Carlo tree draws")
      ->capture_default_str();
  conn->add_option("--x", *cn_x, "first point, comma separated")
      ->delimiter(',')
      ->required();
  conn->add_option("--z", *cn_z, "second point, comma separated")
      ->delimiter(',')
      ->required();
  conn->callback([=, &exit_code] {
    if (cn_common->threads > 0) set_thread_hint(cn_common->threads);
    BuilderConfig cfg = to_config(*cn_builder);
    int d = static_cast<int>(cn_x->size());
    if (d < 1 || static_cast<int>(cn_z->size()) != d)
      throw std::invalid_argument(
          "connect: --x and --z must have the same (positive) length");
    Rng master(cn_common->seed);
    ConnectionEstimate est;
    double closed = std::numeric_limits<double>::quiet_NaN();
    if (cfg.kind == BuilderKind::Uniform) {
      est = uniform_connection_mc(d, cfg.uniform.levels, *cn_x, *cn_z,
                                  *cn_trials, cn_common->seed);
      std::vector<double> sep(d);
      for (int j = 0; j < d; ++j) sep[j] = std::abs((*cn_x)[j] - (*cn_z)[j]);
      closed = uniform_connection_origin(cfg.uniform.levels, sep);
    } else {
      if (*cn_n < 1)
        throw std::invalid_argument(
            "connect: --n required for data-dependent builders");
      RegressionModel model = parse_model(cn_model->mean, d, cn_model->sigma,
                                          cn_model->xdist);
      Rng data_rng = master.derive("dataset");
      TrainingSet data = sample_dataset(model, *cn_n, data_rng.next_u64());
      est = connection_mc(data, cfg, *cn_x, *cn_z, *cn_trials,
                          cn_common->seed);
    }
    double sep_inf = 0.0;
    for (int j = 0; j < d; ++j)
      sep_inf = std::max(sep_inf, std::abs((*cn_x)[j] - (*cn_z)[j]));
    Report rep;
    rep.tag = "connection";
    rep.config["builder"] = cfg.describe();
    rep.config["d"] = d;
    rep.config["x"] = *cn_x;
    rep.config["z"] = *cn_z;
    rep.config["trials"] = *cn_trials;
    rep.config["seed"] = cn_common->seed;
    rep.columns = {"k",  "d",  "separation_inf", "closed_form_at_separation",
                   "mc", "se"};
    double k_col = cfg.kind == BuilderKind::Uniform
                       ? static_cast<double>(cfg.uniform.levels)
                       : std::numeric_limits<double>::quiet_NaN();
    rep.rows.push_back({k_col, static_cast<double>(d), sep_inf, closed,
                        est.point_estimate, est.se});
    std::string line;
    for (std::size_t c = 0; c < rep.columns.size(); ++c)
      line += (c ? "," : "") + rep.columns[c];
    std::printf("%s\n", line.c_str());
    line.clear();
    for (std::size_t c = 0; c < rep.rows[0].size(); ++c)
      line += (c ? "," : "") + fmt17(rep.rows[0][c]);
    std::printf("%s\n", line.c_str());
    exit_code = finish("connect", *cn_common, std::move(rep));
  });

  // ---- grid-step ----------------------------------------------------------
  auto* gs = app.add_subcommand(
      "grid-step", "Certify the widest mesh keeping 1-K within eps^2/8");
  auto gs_common = std::make_shared<CommonOpts>();
  auto gs_model = std::make_shared<ModelOpts>();
  auto gs_builder = std::make_shared<BuilderOpts>();
  auto gs_n = std::make_shared<int>(0);
  auto gs_eps = std::make_shared<std::vector<double>>(std::vector<double>{0.5});
  auto gs_res = std::make_shared<int>(12);
  auto gs_trials = std::make_shared<int>(20000);
  add_common(gs, *gs_common);
  add_model(gs, *gs_model);
  add_builder(gs, *gs_builder);
  gs->add_option("--n", *gs_n, "training size (data-dependent builders only)")
      ->capture_default_str();
  gs->add_option("--epsilon", *gs_eps, "epsilon values, comma separated")
      ->delimiter(',');
  gs->add_option("--resolution", *gs_res, "finest probe separation is 2^-r")
      ->capture_default_str();
  gs->add_option("--trials", *gs_trials, "Monte Carlo draws per probe pair")
      ->capture_default_str();
  gs->callback([=, &exit_code] {
    if (gs_common->threads > 0) set_thread_hint(gs_common->threads);
    BuilderConfig cfg = to_config(*gs_builder);
    TrainingSet data;
    if (cfg.kind == BuilderKind::Uniform) {
      data.dim = gs_model->d;  // partition never looks at the data
    } else {
      if (*gs_n < 1)
        throw std::invalid_argument(
            "grid-step: --n required for data-dependent builders");
      RegressionModel model = parse_model(gs_model->mean, gs_model->d,
                                          gs_model->sigma, gs_model->xdist);
      Rng master(gs_common->seed);
      Rng data_rng = master.derive("dataset");
      data = sample_dataset(model, *gs_n, data_rng.next_u64());
    }
    Report rep;
    rep.tag = "grid_step";
    rep.config["builder"] = cfg.describe();
    rep.config["d"] = gs_model->d;
    rep.config["resolution"] = *gs_res;
    rep.config["trials"] = *gs_trials;
    rep.config["seed"] = gs_common->seed;
    rep.columns = {"epsilon", "delta_hat", "analytic_lower", "resolution"};
    double finest = std::ldexp(1.0, -*gs_res);
    for (double eps : *gs_eps) {
      GridStepEstimate g = grid_step_estimate(data, cfg, eps, *gs_res,
                                              *gs_trials, gs_common->seed);
      rep.rows.push_back({g.epsilon, g.delta_hat, g.analytic_lower,
                          static_cast<double>(g.probe_resolution)});
      if (cfg.kind == BuilderKind::Uniform)
        rep.add_verdict("certified_at_least_analytic_eps" + fmt17(eps),
                        g.delta_hat + finest >= g.analytic_lower,
                        fmt17(g.delta_hat) + " + probe vs " +
                            fmt17(g.analytic_lower));
    }
    exit_code = finish("grid-step", *gs_common, std::move(rep));
  });

  // ---- risk-gap -----------------------------------------------------------
  auto* rg = app.add_subcommand(
      "risk-gap", "Finite vs infinite forest risk decomposition");
  auto rg_common = std::make_shared<CommonOpts>();
  auto rg_model = std::make_shared<ModelOpts>();
  auto rg_builder = std::make_shared<BuilderOpts>();
  auto rg_n = std::make_shared<int>(200);
  auto rg_mlist = std::make_shared<std::vector<int>>(std::vector<int>{1, 10, 100});
  auto rg_mref = std::make_shared<int>(10000);
  auto rg_datasets = std::make_shared<int>(10);
  auto rg_points = std::make_shared<int>(100);
  add_common(rg, *rg_common);
  add_model(rg, *rg_model);
  add_builder(rg, *rg_builder);
  rg->add_option("--n", *rg_n, "training size")->capture_default_str();
  rg->add_option("--m-list", *rg_mlist, "forest sizes, comma separated")
      ->delimiter(',');
  rg->add_option("--m-ref", *rg_mref, "reference forest size")
      ->capture_default_str();
  rg->add_option("--datasets", *rg_datasets, "independent datasets")
      ->capture_default_str();
  rg->add_option("--test-points", *rg_points, "test draws per dataset")
      ->capture_default_str();
  rg->callback([=, &exit_code] {
    if (rg_common->threads > 0) set_thread_hint(rg_common->threads);
    RegressionModel model = parse_model(rg_model->mean, rg_model->d,
                                        rg_model->sigma, rg_model->xdist);
    Report rep = risk_gap_experiment(model, to_config(*rg_builder), *rg_n,
                                     *rg_mlist, *rg_mref, *rg_datasets,
                                     *rg_points, rg_common->seed);
    exit_code = finish("risk-gap", *rg_common, std::move(rep));
  });

  // ---- clt ----------------------------------------------------------------
  auto* clt = app.add_subcommand(
      "clt", "Replicate distribution of the scaled finite-forest error");
  auto cl_common = std::make_shared<CommonOpts>();
  auto cl_model = std::make_shared<ModelOpts>();
  auto cl_builder = std::make_shared<BuilderOpts>();
  auto cl_n = std::make_shared<int>(500);
  auto cl_points = std::make_shared<int>(10);
  auto cl_m = std::make_shared<int>(1000);
  auto cl_reps = std::make_shared<int>(1000);
  auto cl_mref = std::make_shared<int>(200000);
  add_common(clt, *cl_common);
  add_model(clt, *cl_model);
  add_builder(clt, *cl_builder);
  clt->add_option("--n", *cl_n, "training size")->capture_default_str();
  clt->add_option("--points", *cl_points, "test points")->capture_default_str();
  clt->add_option("--m", *cl_m, "forest size per replicate")
      ->capture_default_str();
  clt->add_option("--replicates", *cl_reps, "replicate forests")
      ->capture_default_str();
  clt->add_option("--m-ref", *cl_mref, "reference forest size")
      ->capture_default_str();
  clt->callback([=, &exit_code] {
    if (cl_common->threads > 0) set_thread_hint(cl_common->threads);
    RegressionModel model = parse_model(cl_model->mean, cl_model->d,
                                        cl_model->sigma, cl_model->xdist);
    Report rep =
        clt_experiment(model, to_config(*cl_builder), *cl_n, *cl_points, *cl_m,
                       *cl_reps, *cl_mref, cl_common->seed);
    exit_code = finish("clt", *cl_common, std::move(rep));
  });

  // ---- sup-conv -----------------------------------------------------------
  auto* sc = app.add_subcommand(
      "sup-conv", "Sup-norm distance to the reference forest across M");
  auto sc_common = std::make_shared<CommonOpts>();
  auto sc_model = std::make_shared<ModelOpts>();
  auto sc_builder = std::make_shared<BuilderOpts>();
  auto sc_n = std::make_shared<int>(500);
  auto sc_res = std::make_shared<int>(256);
  auto sc_mlist = std::make_shared<std::vector<int>>(
      std::vector<int>{10, 100, 1000, 10000});
  auto sc_mref = std::make_shared<int>(200000);
  add_common(sc, *sc_common);
  add_model(sc, *sc_model);
  add_builder(sc, *sc_builder);
  sc->add_option("--n", *sc_n, "training size")->capture_default_str();
  sc->add_option("--resolution", *sc_res, "grid resolution per axis")
      ->capture_default_str();
  sc->add_option("--m-list", *sc_mlist, "forest sizes, comma separated")
      ->delimiter(',');
  sc->add_option("--m-ref", *sc_mref, "reference forest size")
      ->capture_default_str();
  sc->callback([=, &exit_code] {
    if (sc_common->threads > 0) set_thread_hint(sc_common->threads);
    RegressionModel model = parse_model(sc_model->mean, sc_model->d,
                                        sc_model->sigma, sc_model->xdist);
    Report rep = sup_convergence_experiment(model, to_config(*sc_builder),
                                            *sc_n, *sc_res, *sc_mlist,
                                            *sc_mref, sc_common->seed);
    exit_code = finish("sup-conv", *sc_common, std::move(rep));
  });

  // ---- consistency ----------------------------------------------------------
  auto* cs = app.add_subcommand(
      "consistency", "Risk sweep along n with scheduled complexity");
  auto cs_common = std::make_shared<CommonOpts>();
  auto cs_model = std::make_shared<ModelOpts>();
  auto cs_builder = std::make_shared<std::string>("quantile");
  auto cs_nlist = std::make_shared<std::vector<int>>(
      std::vector<int>{200, 2000});
  auto cs_m = std::make_shared<int>(500);
  auto cs_datasets = std::make_shared<int>(10);
  auto cs_points = std::make_shared<int>(200);
  add_common(cs, *cs_common);
  add_model(cs, *cs_model);
  cs->add_option("--builder", *cs_builder, "uniform|quantile")
      ->capture_default_str();
  cs->add_option("--n-list", *cs_nlist, "sample sizes, comma separated")
      ->delimiter(',');
  cs->add_option("--m", *cs_m, "forest size")->capture_default_str();
  cs->add_option("--datasets", *cs_datasets, "independent datasets")
      ->capture_default_str();
  cs->add_option("--test-points", *cs_points, "test draws per dataset")
      ->capture_default_str();
  cs->callback([=, &exit_code] {
    if (cs_common->threads > 0) set_thread_hint(cs_common->threads);
    RegressionModel model = parse_model(cs_model->mean, cs_model->d,
                                        cs_model->sigma, cs_model->xdist);
    BuilderKind kind;
    if (*cs_builder == "uniform")
      kind = BuilderKind::Uniform;
    else if (*cs_builder == "quantile")
      kind = BuilderKind::Quantile;
    else
      throw std::invalid_argument(
          "consistency: builder must be uniform or quantile");
    Report rep = consistency_sweep(model, kind, *cs_nlist, *cs_m, *cs_datasets,
                                   *cs_points, cs_common->seed);
    exit_code = finish("consistency", *cs_common, std::move(rep));
  });

  // ---- diagnostics ----------------------------------------------------------
  auto* dg = app.add_subcommand(
      "diagnostics", "Local-averaging diagnostics for a quantile forest");
  auto dg_common = std::make_shared<CommonOpts>();
  auto dg_model = std::make_shared<ModelOpts>();
  auto dg_n = std::make_shared<int>(1000);
  auto dg_an = std::make_shared<int>(100);
  auto dg_q = std::make_shared<double>(0.8);
  auto dg_m = std::make_shared<int>(10000);
  auto dg_points = std::make_shared<int>(100);
  add_common(dg, *dg_common);
  add_model(dg, *dg_model);
  dg->add_option("--n", *dg_n, "training size")->capture_default_str();
  dg->add_option("--a-n", *dg_an, "subsample per tree (0 = use all)")
      ->capture_default_str();
  dg->add_option("--q", *dg_q, "quantile range parameter")
      ->capture_default_str();
  dg->add_option("--m", *dg_m, "forest size")->capture_default_str();
  dg->add_option("--points", *dg_points, "query points")->capture_default_str();
  dg->callback([=, &exit_code] {
    if (dg_common->threads > 0) set_thread_hint(dg_common->threads);
    RegressionModel model = parse_model(dg_model->mean, dg_model->d,
                                        dg_model->sigma, dg_model->xdist);
    BuilderConfig cfg;
    cfg.kind = BuilderKind::Quantile;
    cfg.quantile.q = *dg_q;
    cfg.quantile.subsample = *dg_an;
    Report rep = stone_diagnostics(model, cfg, *dg_n, *dg_m, *dg_points,
                                   dg_common->seed);
    exit_code = finish("diagnostics", *dg_common, std::move(rep));
  });

  // ---- side-length ----------------------------------------------------------
  auto* sl = app.add_subcommand(
      "side-length", "Cell side lengths of a uniform partition vs analytic");
  auto sl_common = std::make_shared<CommonOpts>();
  auto sl_d = std::make_shared<int>(1);
  auto sl_k = std::make_shared<int>(4);
  auto sl_trials = std::make_shared<int>(200000);
  add_common(sl, *sl_common);
  sl->add_option("--d", *sl_d, "dimension")->capture_default_str();
  sl->add_option("--k", *sl_k, "partition depth")->capture_default_str();
  sl->add_option("--trials", *sl_trials, "Monte Carlo draws")
      ->capture_default_str();
  sl->callback([=, &exit_code] {
    if (sl_common->threads > 0) set_thread_hint(sl_common->threads);
    Report rep =
        uniform_side_length_check(*sl_d, *sl_k, *sl_trials, sl_common->seed);
    exit_code = finish("side-length", *sl_common, std::move(rep));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return exit_code;
}
