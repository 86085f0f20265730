#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "snodep/config.hpp"
#include "snodep/distributions.hpp"
#include "snodep/error.hpp"
#include "snodep/evaluation.hpp"
#include "snodep/knockout.hpp"
#include "snodep/parameters.hpp"
#include "snodep/pathway.hpp"
#include "snodep/process_model.hpp"
#include "snodep/scfea.hpp"
#include "snodep/synthetic.hpp"
#include "snodep/training.hpp"

namespace py = pybind11;
using namespace snodep;

namespace {

// count x dim copy of one timestep.
py::array_t<double> samples_array(const SampleMatrix& s) {
  py::array_t<double> out({s.count(), s.dim});
  std::copy(s.data.begin(), s.data.end(), out.mutable_data());
  return out;
}

SampleMatrix to_samples(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw ShapeError("samples must be a 2-d array (count x dim)");
  SampleMatrix s;
  s.dim = static_cast<std::size_t>(a.shape(1));
  s.data.assign(a.data(), a.data() + a.size());
  for (py::ssize_t j = 0; j < a.shape(0); ++j) s.ids.push_back("s" + std::to_string(j));
  return s;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["times"] = r.times;
  d["mse"] = r.mse;
  d["per_dim"] = r.per_dim;
  d["unseen_from"] = r.unseen_from;
  d["unseen_mse"] = r.unseen_mse;
  d["all_mse"] = r.all_mse;
  return d;
}

// Model plus the run configuration it was built from.
struct PyModel {
  RunConfig run;
  std::uint64_t seed;
  ProcessModel model;
};

PyModel make_model(const TimeSeriesDataset& data, const std::string& config_json, std::uint64_t seed) {
  RunConfig run = parse_run_config(config_json);
  ProcessModel model(model_config(run, data, derive_seed(seed, 0)));
  return PyModel{run, seed, std::move(model)};
}

}  // namespace

PYBIND11_MODULE(_snodep, m) {
  m.doc() = "Neural ODE processes for time-varying sample distributions";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<TimeSeriesDataset>(m, "Dataset")
      .def(py::init([](std::vector<double> times, std::vector<py::array_t<double>> steps,
                       std::vector<std::string> features, const std::string& kind) {
             TimeSeriesDataset ds;
             ds.kind = parse_data_kind(kind);
             ds.times = std::move(times);
             ds.features = std::move(features);
             for (auto& a : steps) ds.steps.push_back(to_samples(a));
             ds.validate();
             return ds;
           }),
           py::arg("times"), py::arg("samples"), py::arg("features"), py::arg("kind") = "normalized")
      .def_static("read_csv", &read_dataset_csv, py::arg("path"))
      .def("write_csv", [](const TimeSeriesDataset& ds, const std::filesystem::path& p) { write_dataset_csv(ds, p); })
      .def_property_readonly("times", [](const TimeSeriesDataset& ds) { return ds.times; })
      .def_property_readonly("features", [](const TimeSeriesDataset& ds) { return ds.features; })
      .def_property_readonly("kind", [](const TimeSeriesDataset& ds) { return to_string(ds.kind); })
      .def_property_readonly("knockout_dims", [](const TimeSeriesDataset& ds) { return ds.knockout_dims; })
      .def("samples", [](const TimeSeriesDataset& ds, std::size_t t) { return samples_array(ds.steps.at(t)); })
      .def("__len__", &TimeSeriesDataset::num_timesteps)
      .def("split", [](const TimeSeriesDataset& ds, double f, std::uint64_t seed) { return split_samples(ds, f, seed); },
           py::arg("test_fraction") = 0.2, py::arg("seed") = 0)
      .def("log_normalize", &log_normalize_scale, py::arg("window") = 0);

  m.def(
      "generate_synthetic",
      [](const std::string& kind, std::size_t dim, std::size_t timesteps, std::size_t cells, std::uint64_t seed) {
        SyntheticSpec s;
        s.kind = parse_head_kind(kind);
        s.y_dim = dim;
        s.timesteps = timesteps;
        s.cells_per_t = cells;
        s.seed = seed;
        SyntheticData d = generate_synthetic(s);
        return py::make_tuple(d.data, d.mean, d.sd);
      },
      py::arg("kind") = "poisson", py::arg("dim") = 4, py::arg("timesteps") = 16, py::arg("cells") = 200,
      py::arg("seed") = 0, "Returns (dataset, true means, true standard deviations).");

  py::class_<PyModel>(m, "Model")
      .def(py::init(&make_model), py::arg("data"), py::arg("config") = "{}", py::arg("seed") = 0,
           "Model sized for `data`; `config` is a JSON run configuration.")
      .def_property_readonly("kind", [](const PyModel& p) { return to_string(p.model.kind()); })
      .def_property_readonly("num_parameters", [](const PyModel& p) { return p.model.parameters().scalar_count(); })
      .def(
          "train",
          [](PyModel& p, const TimeSeriesDataset& data) {
            TrainConfig tc = train_config(p.run, derive_seed(p.seed, 1));
            py::gil_scoped_release release;
            return train(p.model, data, tc).losses;
          },
          py::arg("data"), "Runs the configured training loop; returns the loss curve.")
      .def(
          "evaluate",
          [](const PyModel& p, const TimeSeriesDataset& test) {
            return report_dict(evaluate(p.model, test, eval_config(p.run, derive_seed(p.seed, 2))));
          },
          py::arg("test"))
      .def(
          "predict_means",
          [](const PyModel& p, const TimeSeriesDataset& data) {
            return predict_means(p.model, data, eval_config(p.run, derive_seed(p.seed, 2)));
          },
          py::arg("data"), "Mean parameters (timestep x dim) averaged over contexts drawn from `data`.")
      .def("save", [](const PyModel& p, const std::filesystem::path& path) { save_checkpoint(p.model.parameters(), path); })
      .def("load", [](PyModel& p, const std::filesystem::path& path) { load_checkpoint(p.model.parameters(), path); });

  m.def("constant_mean_mse",
        [](const TimeSeriesDataset& train_ds, const TimeSeriesDataset& test, const std::string& head,
           std::size_t upto) {
          return report_dict(evaluate_constant_mean(parse_head_kind(head), train_ds, test, upto, upto));
        },
        py::arg("train"), py::arg("test"), py::arg("head") = "poisson", py::arg("upto") = 13);

  m.def("poisson_mse", &poisson_mse, py::arg("rate"), py::arg("true_rate"));
  m.def("gaussian_mse", &gaussian_mse, py::arg("mean"), py::arg("true_mean"), py::arg("true_var"));
  m.def(
      "normal_kl",
      [](double mu_p, double sigma_p, double mu_q, double sigma_q) {
        auto n = [](double mu, double s) {
          return DiagNormal{Tensor::constant({1, 1}, {mu}), Tensor::constant({1, 1}, {s})};
        };
        return kl_divergence(n(mu_p, sigma_p), n(mu_q, sigma_q)).item();
      },
      py::arg("mu_p"), py::arg("sigma_p"), py::arg("mu_q"), py::arg("sigma_q"));
  m.def(
      "poisson_log_prob",
      [](double k, double rate) {
        return log_prob(PoissonD{Tensor::constant({1, 1}, {rate})}, Tensor::constant({1, 1}, {k})).item();
      },
      py::arg("k"), py::arg("rate"));

  py::class_<PathwayDef>(m, "Pathway")
      .def_static("from_json", &parse_pathway_json, py::arg("text"))
      .def_static("chain", &chain_pathway, py::arg("modules"), py::arg("genes_per_module"))
      .def("to_json", &pathway_to_json)
      .def_property_readonly("genes", [](const PathwayDef& p) { return p.genes; })
      .def("hop2_neighbors", [](const PathwayDef& p) { return hop2_neighbors(build_factor_graph(p)).neighbors; });

  m.def(
      "estimate_flux",
      [](const TimeSeriesDataset& ds, const PathwayDef& pathway, std::size_t steps, std::uint64_t seed) {
        ScfeaConfig cfg;
        cfg.steps = steps;
        cfg.seed = seed;
        FluxEstimate e;
        {
          py::gil_scoped_release release;
          e = estimate_flux_balance(ds, pathway, cfg);
        }
        return py::make_tuple(e.flux, e.balance, e.initial_loss, e.final_loss);
      },
      py::arg("data"), py::arg("pathway"), py::arg("steps") = 1000, py::arg("seed") = 0,
      "Returns (flux, balance, initial losses, final losses).");
}
