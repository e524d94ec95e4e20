#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "json.hpp"
#include "rflab/experiments.hpp"

using namespace rflab;

namespace {

BuilderConfig uniform_cfg(int levels) {
  BuilderConfig cfg;
  cfg.kind = BuilderKind::Uniform;
  cfg.uniform.levels = levels;
  return cfg;
}

BuilderConfig quantile_cfg(int subsample, double q = 0.8) {
  BuilderConfig cfg;
  cfg.kind = BuilderKind::Quantile;
  cfg.quantile.q = q;
  cfg.quantile.subsample = subsample;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("rflab_test_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("tree budget follows the envelope arithmetic") {
  // 8 * (1 + 0) / 8 = 1 tree.
  CHECK(trees_needed(8.0, 1.0, 0.0, 10) == 1);
  // Huge epsilon floors at one tree.
  CHECK(trees_needed(1e9, 1.0, 1.0, 1000) == 1);
  // n = 1 kills the log term: 8 * (1 + 1) / 16 = 1.
  CHECK(trees_needed(16.0, 1.0, 1.0, 1) == 1);
  // Small epsilon scales like 1/epsilon.
  CHECK(trees_needed(0.008, 1.0, 0.0, 1) == 1000);
  CHECK_THROWS_AS(trees_needed(0.0, 1.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(trees_needed(1.0, 1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("noiseless constant regression has zero risk") {
  RegressionModel m = parse_model("constant", 1, 0.0, "uniform");
  RiskEstimate r = estimate_risk(m, quantile_cfg(10), 30, 10, 3, 40, 5);
  CHECK(r.replicates == 3 * 40);  // datasets x test points
  CHECK(r.value <= 1e-25);
}

TEST_CASE("risk falls when trees are added") {
  RegressionModel m = parse_model("sines", 1, 0.3, "uniform");
  RiskEstimate one = estimate_risk(m, uniform_cfg(3), 80, 1, 6, 80, 5);
  RiskEstimate many = estimate_risk(m, uniform_cfg(3), 80, 100, 6, 80, 5);
  double joint = 2.0 * std::sqrt(one.se * one.se + many.se * many.se);
  CHECK(many.value <= one.value + joint);
}

TEST_CASE("risk gap experiment validates the reference rule") {
  RegressionModel m = parse_model("sines", 1, 0.1, "uniform");
  CHECK_THROWS_AS(
      risk_gap_experiment(m, uniform_cfg(2), 50, {1, 10, 100}, 500, 3, 10, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(risk_gap_experiment(m, uniform_cfg(2), 50, {}, 500, 3, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("risk gap rows carry the decomposition at desk scale") {
  RegressionModel m = parse_model("sines", 1, 0.2, "uniform");
  Report rep =
      risk_gap_experiment(m, uniform_cfg(3), 60, {1, 5}, 500, 4, 40, 21);
  CHECK(rep.tag == "risk_gap");
  REQUIRE(rep.rows.size() == 2);
  int c_m = rep.column_index("m");
  int c_gap = rep.column_index("gap_direct");
  int c_bound = rep.column_index("bound");
  REQUIRE(c_m >= 0);
  REQUIRE(c_gap >= 0);
  REQUIRE(c_bound >= 0);
  CHECK(rep.rows[0][c_m] == 1.0);
  CHECK(rep.rows[1][c_m] == 5.0);
  // The analytic envelope dominates the measured gap at every M.
  for (const auto& row : rep.rows) CHECK(row[c_gap] <= row[c_bound]);
  // Verdicts exist for each M plus the slope.
  CHECK(rep.verdicts.size() == 5);
}

TEST_CASE("clt experiment rejects undersized designs") {
  RegressionModel m = parse_model("sines", 1, 0.2, "uniform");
  CHECK_THROWS_AS(clt_experiment(m, uniform_cfg(2), 50, 4, 100, 100, 10000, 1),
                  std::invalid_argument);  // too few replicates
  CHECK_THROWS_AS(clt_experiment(m, uniform_cfg(2), 50, 4, 100, 300, 500, 1),
                  std::invalid_argument);  // reference too small
}

TEST_CASE("degenerate clt points are noted rather than failed") {
  RegressionModel m = parse_model("constant", 1, 0.0, "uniform");
  Report rep = clt_experiment(m, quantile_cfg(10), 30, 4, 10, 200, 1000, 3);
  CHECK(rep.all_pass());
  bool noted = false;
  for (const auto& v : rep.verdicts) noted |= v.name == "degenerate_points_noted";
  CHECK(noted);
}

TEST_CASE("sup convergence is flat when every tree agrees") {
  RegressionModel m = parse_model("constant", 1, 0.0, "uniform");
  Report rep =
      sup_convergence_experiment(m, quantile_cfg(10), 30, 16, {2, 8}, 800, 9);
  CHECK(rep.tag == "sup_convergence");
  int c_sup = rep.column_index("sup_abs_diff");
  REQUIRE(c_sup >= 0);
  for (const auto& row : rep.rows) CHECK(row[c_sup] <= 1e-12);
  CHECK(rep.all_pass());  // degenerate slope counts as pass with a note
}

TEST_CASE("consistency sweep demands an increasing sample schedule") {
  RegressionModel m = parse_model("sines", 2, 0.5, "uniform");
  CHECK_THROWS_AS(
      consistency_sweep(m, BuilderKind::Quantile, {200, 100}, 10, 3, 20, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(
      consistency_sweep(m, BuilderKind::Breiman, {100, 200}, 10, 3, 20, 1),
      std::invalid_argument);
}

TEST_CASE("stone diagnostics hold on a small quantile forest") {
  RegressionModel m = parse_model("sines", 2, 0.3, "uniform");
  Report rep = stone_diagnostics(m, quantile_cfg(20), 60, 300, 10, 13);
  CHECK(rep.tag == "stone_diagnostics");
  CHECK(rep.all_pass());
  int c_ws = rep.column_index("weight_sum");
  int c_freq = rep.column_index("max_conn_freq");
  REQUIRE(c_ws >= 0);
  REQUIRE(c_freq >= 0);
  for (const auto& row : rep.rows) {
    CHECK(row[c_ws] == 1.0);
    CHECK(row[c_freq] <= 1.0);
  }
  // Non-quantile builders are rejected.
  CHECK_THROWS_AS(stone_diagnostics(m, uniform_cfg(2), 60, 10, 5, 1),
                  std::invalid_argument);
}

TEST_CASE("side length report matches the split-free and one-split cases") {
  Report flat = uniform_side_length_check(2, 0, 500, 3);
  int c_side = flat.column_index("side_mean");
  int c_dom = flat.column_index("dominating_mean");
  int c_analytic = flat.column_index("analytic");
  REQUIRE(c_side >= 0);
  for (const auto& row : flat.rows) {
    CHECK(row[c_side] == 1.0);
    CHECK(row[c_dom] == 1.0);
    CHECK(row[c_analytic] == 1.0);
  }
  CHECK(flat.all_pass());

  Report one = uniform_side_length_check(1, 1, 40000, 5);
  CHECK(one.rows[0][c_analytic] == 0.75);
  CHECK(one.rows[0][c_dom] == doctest::Approx(0.75).epsilon(0.01));
  CHECK(one.all_pass());
}

TEST_CASE("reports serialize to csv and json atomically") {
  Report rep;
  rep.tag = "demo";
  rep.config["alpha"] = 2;
  rep.columns = {"a", "b"};
  rep.rows = {{1.0, 0.1}, {2.0, 1.0 / 3.0}};
  rep.add_verdict("looks_right", true, "by construction");
  rep.wall_seconds = 0.25;

  CHECK(rep.all_pass());
  CHECK(rep.column_index("b") == 1);
  CHECK(rep.column_index("zzz") == -1);

  std::string csv = report_csv(rep);
  CHECK(csv.find("a,b\n") == 0);
  CHECK(csv.find("0.10000000000000001") != std::string::npos);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);

  nlohmann::json j = nlohmann::json::parse(report_json(rep));
  CHECK(j["tag"] == "demo");
  CHECK(j["all_pass"] == true);
  CHECK(j["config"]["alpha"] == 2);
  REQUIRE(j["verdicts"].size() == 1);
  CHECK(j["verdicts"][0]["name"] == "looks_right");

  TempDir tmp;
  write_report(tmp.path.string(), rep);
  CHECK(slurp(tmp.path / "demo.csv") == csv);
  CHECK(std::filesystem::exists(tmp.path / "demo.json"));
  // No temp droppings left behind.
  for (const auto& e : std::filesystem::directory_iterator(tmp.path))
    CHECK(e.path().extension() != ".tmp");

  // Labeled rows gain a leading label column.
  rep.row_labels = {"first", "second"};
  std::string labeled = report_csv(rep);
  CHECK(labeled.find("label,a,b\n") == 0);
  CHECK(labeled.find("first,") != std::string::npos);
}

TEST_CASE("fmt17 round-trips doubles through text") {
  for (double v : {0.1, 1.0 / 3.0, 1e300, 1.2345678901234567e-8, 0.0, -2.5}) {
    std::string s = fmt17(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("datasets round-trip through their csv dump") {
  RegressionModel m = parse_model("linear", 2, 0.1, "uniform");
  TrainingSet data = sample_dataset(m, 10, 77);
  TempDir tmp;
  write_dataset(tmp.path.string(), "dataset", data, m);
  std::string csv = slurp(tmp.path / "dataset.csv");
  CHECK(csv.rfind("x1,x2,y\n", 0) == 0);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 11);  // header + 10 rows
  nlohmann::json meta = nlohmann::json::parse(slurp(tmp.path / "dataset.json"));
  CHECK(meta["n"] == 10);
  CHECK(meta["model"] == "linear_d2_uniform");
}

TEST_CASE("atomic writes replace existing content completely") {
  TempDir tmp;
  std::filesystem::create_directories(tmp.path);
  auto p = (tmp.path / "file.txt").string();
  write_text_atomic(p, "first version\n");
  CHECK(slurp(p) == "first version\n");
  write_text_atomic(p, "x");
  CHECK(slurp(p) == "x");
}
