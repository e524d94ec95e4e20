#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rflab/connection.hpp"
#include "rflab/experiments.hpp"
#include "rflab/forest.hpp"
#include "rflab/model.hpp"
#include "rflab/tree.hpp"

namespace py = pybind11;
using namespace rflab;

namespace {

BuilderConfig make_uniform(int levels) {
  BuilderConfig cfg;
  cfg.kind = BuilderKind::Uniform;
  cfg.uniform.levels = levels;
  return cfg;
}

BuilderConfig make_quantile(double q, int subsample, double fixed_qn) {
  BuilderConfig cfg;
  cfg.kind = BuilderKind::Quantile;
  cfg.quantile.q = q;
  cfg.quantile.subsample = subsample;
  cfg.quantile.fixed_qn = fixed_qn;
  return cfg;
}

BuilderConfig make_breiman(int mtry, int nodesize, const std::string& resample,
                           int subsample) {
  BuilderConfig cfg;
  cfg.kind = BuilderKind::Breiman;
  cfg.breiman.mtry = mtry;
  cfg.breiman.nodesize = nodesize;
  cfg.breiman.subsample = subsample;
  if (resample == "none")
    cfg.breiman.resample = Resample::None;
  else if (resample == "subsample")
    cfg.breiman.resample = Resample::Subsample;
  else if (resample == "bootstrap")
    cfg.breiman.resample = Resample::Bootstrap;
  else
    throw std::invalid_argument("resample must be none|subsample|bootstrap");
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random-forest regression laboratory (C++ core)";

  py::class_<RegressionModel>(m, "RegressionModel")
      .def_property_readonly("dim",
                             [](const RegressionModel& r) { return r.dim; })
      .def_property_readonly("sigma",
                             [](const RegressionModel& r) { return r.sigma; })
      .def("mean_at",
           [](const RegressionModel& r, const std::vector<double>& x) {
             return r.mean_at(x);
           })
      .def("sup_norm", &RegressionModel::sup_norm)
      .def("tag", &RegressionModel::tag);

  m.def("parse_model", &parse_model, py::arg("mean"), py::arg("dim"),
        py::arg("sigma"), py::arg("xdist") = "uniform");

  py::class_<TrainingSet>(m, "TrainingSet")
      .def_property_readonly("dim",
                             [](const TrainingSet& t) { return t.dim; })
      .def_property_readonly("x", [](const TrainingSet& t) { return t.xs; })
      .def_property_readonly("y", [](const TrainingSet& t) { return t.ys; })
      .def("size", &TrainingSet::size);

  m.def("sample_dataset", &sample_dataset, py::arg("model"), py::arg("n"),
        py::arg("seed"));

  py::class_<BuilderConfig>(m, "BuilderConfig")
      .def("describe", &BuilderConfig::describe);
  m.def("uniform_builder", &make_uniform, py::arg("levels"));
  m.def("quantile_builder", &make_quantile, py::arg("q") = 0.8,
        py::arg("subsample") = 0, py::arg("fixed_qn") = -1.0);
  m.def("breiman_builder", &make_breiman, py::arg("mtry") = 0,
        py::arg("nodesize") = 5, py::arg("resample") = "none",
        py::arg("subsample") = 0);

  py::class_<Forest>(m, "Forest")
      .def("size", &Forest::size)
      .def("predict",
           [](const Forest& f, const std::vector<double>& x) {
             return forest_predict(f, x);
           })
      .def("weights",
           [](const Forest& f, const std::vector<double>& x) {
             return forest_weights(f, x);
           })
      .def("tree_json", [](const Forest& f, int i) {
        if (i < 0 || i >= f.size()) throw std::out_of_range("tree index");
        return tree_to_json(f.trees[static_cast<std::size_t>(i)]);
      });

  m.def("grow_forest", &grow_forest, py::arg("data"), py::arg("config"),
        py::arg("m"), py::arg("seed"));

  m.def("uniform_connection_1d", &uniform_connection_1d, py::arg("k"),
        py::arg("x"));
  m.def(
      "uniform_connection_origin",
      [](int k, const std::vector<double>& x) {
        return uniform_connection_origin(k, x);
      },
      py::arg("k"), py::arg("x"));
  m.def(
      "uniform_connection_mc",
      [](int dim, int levels, const std::vector<double>& x,
         const std::vector<double>& z, int trials, std::uint64_t seed) {
        ConnectionEstimate e =
            uniform_connection_mc(dim, levels, x, z, trials, seed);
        return py::make_tuple(e.point_estimate, e.se);
      },
      py::arg("dim"), py::arg("levels"), py::arg("x"), py::arg("z"),
      py::arg("trials"), py::arg("seed"));
  m.def(
      "connection_mc",
      [](const TrainingSet& data, const BuilderConfig& cfg,
         const std::vector<double>& x, const std::vector<double>& z,
         int trials, std::uint64_t seed) {
        ConnectionEstimate e = connection_mc(data, cfg, x, z, trials, seed);
        return py::make_tuple(e.point_estimate, e.se);
      },
      py::arg("data"), py::arg("config"), py::arg("x"), py::arg("z"),
      py::arg("trials"), py::arg("seed"));

  m.def(
      "uniform_grid_step_bound",
      [](int k, int d, double epsilon) {
        GridStepBound b = uniform_grid_step_bound(k, d, epsilon);
        return py::make_tuple(b.direct, b.cube_root);
      },
      py::arg("k"), py::arg("d"), py::arg("epsilon"));

  m.def(
      "estimate_risk",
      [](const RegressionModel& model, const BuilderConfig& cfg, int n, int m,
         int datasets, int test_points, std::uint64_t seed) {
        RiskEstimate r =
            estimate_risk(model, cfg, n, m, datasets, test_points, seed);
        return py::make_tuple(r.value, r.se, r.replicates);
      },
      py::arg("model"), py::arg("config"), py::arg("n"), py::arg("m"),
      py::arg("datasets"), py::arg("test_points"), py::arg("seed"));

  m.def("trees_needed", &trees_needed, py::arg("epsilon"),
        py::arg("m_inf_norm"), py::arg("sigma"), py::arg("n"));
}
