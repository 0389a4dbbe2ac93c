// Python bindings for the ismap core. The module mirrors the CLI surface:
// feature tables, the synthetic city, spatial cross-validation, metrics and
// the gradient check. Heavy calls release the GIL.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ismap/experiment.hpp"
#include "ismap/grid.hpp"
#include "ismap/metrics.hpp"
#include "ismap/models.hpp"
#include "ismap/synthetic.hpp"
#include "ismap/version.hpp"

namespace py = pybind11;
using namespace ismap;

namespace {

// (report CSV, summary JSON) of one cross-validation sweep. zones empty
// means every zone in the table; zones=N keeps the first N.
std::pair<std::string, std::string> crossval_raw(
    const FeatureTable& table, const std::string& model, std::uint64_t seed,
    int repetitions, int zones, int jobs, int epochs, int batch_size,
    double learning_rate, bool standardize, bool natural_test) {
  const ModelKind kind = parse_model_kind(model);
  std::vector<int> zone_ids = table.zones();
  if (zones > 0 && zones < static_cast<int>(zone_ids.size()))
    zone_ids.resize(static_cast<std::size_t>(zones));
  CrossvalConfig cc;
  cc.train.epochs = epochs;
  cc.train.batch_size = batch_size;
  cc.train.learning_rate = learning_rate;
  cc.train.seed = seed;
  cc.train.standardize = standardize;
  cc.train.validate();
  cc.repetitions = repetitions;
  cc.jobs = jobs;
  cc.natural_test = natural_test;
  const MetricsReport report = spatial_crossval(table, zone_ids, kind, cc);
  return {report_to_csv(report), report_summary_json(report)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neighbor-aware informal-settlement classification core";
  m.attr("__version__") = kVersion;
  m.attr("FEATURE_NAMES") = std::vector<std::string>(kFeatureNames.begin(),
                                                     kFeatureNames.end());

  py::register_exception<Error>(m, "IsmapError", PyExc_RuntimeError);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init([](double origin_x, double origin_y, double cell_size,
                       int n_rows, int n_cols) {
             GridSpec g{origin_x, origin_y, cell_size, n_rows, n_cols};
             g.validate();
             return g;
           }),
           py::arg("origin_x") = 0.0, py::arg("origin_y") = 0.0,
           py::arg("cell_size") = 150.0, py::arg("n_rows") = 0,
           py::arg("n_cols") = 0)
      .def_readonly("origin_x", &GridSpec::origin_x)
      .def_readonly("origin_y", &GridSpec::origin_y)
      .def_readonly("cell_size", &GridSpec::cell_size)
      .def_readonly("n_rows", &GridSpec::n_rows)
      .def_readonly("n_cols", &GridSpec::n_cols)
      .def("__repr__", [](const GridSpec& g) {
        return "GridSpec(" + std::to_string(g.n_rows) + "x" +
               std::to_string(g.n_cols) + ", cell " +
               std::to_string(g.cell_size) + ")";
      });

  py::class_<CellRecord>(m, "CellRecord")
      .def_readonly("row", &CellRecord::row)
      .def_readonly("col", &CellRecord::col)
      .def_readonly("features", &CellRecord::features)
      .def_property_readonly(
          "label", [](const CellRecord& r) { return r.label; })
      .def_property_readonly("zone",
                             [](const CellRecord& r) { return r.zone; });

  py::class_<FeatureTable>(m, "FeatureTable")
      .def_property_readonly("grid", &FeatureTable::grid)
      .def("__len__", &FeatureTable::size)
      .def("zones", &FeatureTable::zones)
      .def("has", &FeatureTable::has, py::arg("row"), py::arg("col"))
      .def(
          "record",
          [](const FeatureTable& t, int row, int col) -> const CellRecord* {
            return t.find(row, col);
          },
          py::arg("row"), py::arg("col"), py::return_value_policy::reference,
          py::keep_alive<0, 1>())
      .def("records", &FeatureTable::records,
           py::return_value_policy::reference, py::keep_alive<0, 1>())
      .def("to_csv", &feature_table_to_csv);

  m.def("parse_feature_table_csv",
        [](const std::string& text, const std::string& origin) {
          return parse_feature_table_csv(text, origin);
        },
        py::arg("text"), py::arg("origin") = "<string>");
  m.def("load_feature_table", &load_feature_table, py::arg("path"),
        py::call_guard<py::gil_scoped_release>());
  m.def("save_feature_table", &save_feature_table, py::arg("table"),
        py::arg("path"), py::call_guard<py::gil_scoped_release>());

  m.def("class_counts", [](const FeatureTable& t) {
    const ClassCounts c = class_counts(t);
    return py::make_tuple(c.n_favela, c.n_nonfavela, c.n_unlabeled);
  });

  m.def(
      "neighbors_king",
      [](int row, int col, const GridSpec& grid) {
        return neighbors_king(row, col, grid);
      },
      py::arg("row"), py::arg("col"), py::arg("grid"));

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init([](int rows, int cols, int zones, double imbalance,
                       double lam, double sigma, std::uint64_t seed) {
             SynthConfig c;
             c.n_rows = rows;
             c.n_cols = cols;
             c.n_zones = zones;
             c.imbalance = imbalance;
             c.lambda = lam;
             c.sigma = sigma;
             c.seed = seed;
             c.validate();
             return c;
           }),
           py::arg("rows") = 200, py::arg("cols") = 200, py::arg("zones") = 5,
           py::arg("imbalance") = 30.0, py::arg("lambda_") = 0.6,
           py::arg("sigma") = 0.9, py::arg("seed") = 1)
      .def_readonly("rows", &SynthConfig::n_rows)
      .def_readonly("cols", &SynthConfig::n_cols)
      .def_readonly("zones", &SynthConfig::n_zones)
      .def_readonly("imbalance", &SynthConfig::imbalance)
      .def_readonly("lambda_", &SynthConfig::lambda)
      .def_readonly("sigma", &SynthConfig::sigma)
      .def_readonly("seed", &SynthConfig::seed);

  m.def("generate_city", &generate_city, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("synth_sidecar_json", &synth_sidecar_json, py::arg("config"),
        py::arg("table"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "oracle_metrics",
      [](const SynthConfig& c) {
        OracleMetrics om;
        {
          py::gil_scoped_release release;
          om = oracle_metrics(c);
        }
        py::dict d;
        d["kappa"] = om.kappa;
        d["accuracy_favela"] = om.acc_favela;
        d["accuracy_formal"] = om.acc_formal;
        d["n_samples"] = om.n_samples;
        return d;
      },
      py::arg("config"));

  m.def(
      "compute_metrics",
      [](long long tp, long long fp, long long fn, long long tn) {
        Metrics mt = compute_metrics(ConfusionMatrix{tp, fp, fn, tn});
        py::dict d;
        d["precision"] = mt.precision;
        d["recall"] = mt.recall;
        d["f1"] = mt.f1;
        d["kappa"] = mt.kappa;
        d["degenerate"] = mt.degenerate;
        return d;
      },
      py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn"));

  m.def("crossval_raw", &crossval_raw, py::arg("table"), py::arg("model"),
        py::arg("seed") = 1, py::arg("repetitions") = 10, py::arg("zones") = 0,
        py::arg("jobs") = 1, py::arg("epochs") = 400,
        py::arg("batch_size") = 32, py::arg("learning_rate") = 0.001,
        py::arg("standardize") = true, py::arg("natural_test") = false,
        py::call_guard<py::gil_scoped_release>());

  m.def(
      "gradcheck",
      [](const std::string& model, std::uint64_t seed) {
        const ModelKind kind = parse_model_kind(model);
        py::gil_scoped_release release;
        return gradcheck_model(kind, seed);
      },
      py::arg("model"), py::arg("seed") = 1);
}
