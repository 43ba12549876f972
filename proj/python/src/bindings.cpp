#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "snnprune/checkpoint.hpp"
#include "snnprune/dataset.hpp"
#include "snnprune/energy.hpp"
#include "snnprune/error.hpp"
#include "snnprune/experiment.hpp"
#include "snnprune/lif.hpp"
#include "snnprune/metrics.hpp"
#include "snnprune/prune.hpp"

namespace py = pybind11;
using namespace snnprune;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ContractError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict prune_summary(const PruneResult& r) {
  py::dict d;
  d["final_pruned"] = r.final_pruned;
  d["total_epochs"] = r.total_epochs;
  d["termination"] = r.termination;
  return d;
}

}  // namespace

PYBIND11_MODULE(_snnprune, m) {
  m.doc() = "Spiking network decoding with adaptive magnitude pruning.";

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);
  py::register_exception<DatasetError>(m, "DatasetError", PyExc_IOError);

  py::class_<LifParams>(m, "LifParams")
      .def(py::init<>())
      .def_readwrite("tau", &LifParams::tau)
      .def_readwrite("threshold", &LifParams::threshold)
      .def_readwrite("reset_value", &LifParams::reset_value)
      .def_readwrite("dt", &LifParams::dt);

  m.def("lif_membrane_update",
        [](const std::vector<double>& u, const std::vector<double>& current, const LifParams& p) {
          return lif_membrane_update(u, current, p);
        },
        py::arg("u_prev"), py::arg("input_current"), py::arg("params"));

  py::enum_<UpdateCountMode>(m, "UpdateCountMode")
      .value("PAPER_CONSISTENT", UpdateCountMode::PaperConsistent)
      .value("PER_NEURON", UpdateCountMode::PerNeuron);

  py::class_<EnergyParams>(m, "EnergyParams")
      .def(py::init<>())
      .def_readwrite("e_ac_pj", &EnergyParams::e_ac_pj)
      .def_readwrite("e_update_pj", &EnergyParams::e_update_pj)
      .def_readwrite("dt_ms", &EnergyParams::dt_ms)
      .def_readwrite("mode", &EnergyParams::mode);

  m.def("energy_per_timestep", &energy_per_timestep, py::arg("avg_acs"), py::arg("n_neurons"),
        py::arg("params") = EnergyParams{});
  m.def("average_power", &average_power, py::arg("energy_pj"), py::arg("dt_ms"));

  m.def("r_squared", [](py::array pred, py::array truth) { return r_squared(to_matrix(pred), to_matrix(truth)); },
        py::arg("pred"), py::arg("truth"));

  py::class_<Network>(m, "Network")
      .def_static("load", [](const std::filesystem::path& p) { return load_checkpoint(p).net; }, py::arg("path"))
      .def_property_readonly("layer_dims", [](const Network& n) { return n.config.layer_dims; })
      .def_property_readonly("num_layers", [](const Network& n) { return n.layers.size(); })
      .def("weights", [](const Network& n, std::size_t l) { return to_array(n.layers.at(l).weights); })
      .def("mask",
           [](const Network& n, std::size_t l) {
             const auto& layer = n.layers.at(l);
             py::array_t<std::uint8_t> out({layer.post_dim(), layer.pre_dim()});
             std::copy(layer.mask.begin(), layer.mask.end(), out.mutable_data());
             return out;
           })
      .def_property_readonly("prunable_weight_count", &Network::prunable_weight_count)
      .def_property_readonly("pruned_fraction", &Network::pruned_fraction)
      .def_property_readonly("connection_sparsity", [](const Network& n) { return connection_sparsity(n); })
      .def("prune_step",
           [](Network& n, double rate, const std::string& scope, double pruned_max) {
             return prune_step(n, rate, prune_scope_from_string(scope), pruned_max).removed;
           },
           py::arg("rate_pct"), py::arg("scope") = "per-layer", py::arg("pruned_max") = 1.0)
      .def("__eq__", [](const Network& a, const Network& b) { return a == b; });

  m.def("make_snn3", [](std::size_t input_dim, std::uint64_t seed) {
    return Network::initialize(make_snn3_config(input_dim, seed));
  }, py::arg("input_dim"), py::arg("seed") = 0);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_static("load", &load_experiment_config, py::arg("path"))
      .def_property(
          "output_dir", [](const ExperimentConfig& c) { return c.output_dir; },
          [](ExperimentConfig& c, const std::filesystem::path& p) {
            c.output_dir = p;
            c.output_dir_text = p.string();
          })
      .def_readonly("dataset_path", &ExperimentConfig::dataset_path)
      .def_readonly("seed", &ExperimentConfig::seed)
      .def("digest", &ExperimentConfig::digest)
      .def("to_dict", [](const ExperimentConfig& c) { return to_python(c.to_json()); });

  m.def("synth", [](const ExperimentConfig& c) {
    const auto r = cmd_synth(c);
    py::dict d;
    d["session_path"] = r.session_path;
    d["spike_rate"] = r.spike_rate;
    return d;
  });
  m.def("pretrain", [](const ExperimentConfig& c) {
    const auto r = cmd_pretrain(c);
    py::dict d;
    d["checkpoint_path"] = r.checkpoint_path;
    d["trace_path"] = r.trace_path;
    d["target_loss"] = r.target_loss;
    d["val_r2"] = r.val_r2;
    d["epochs"] = r.epochs;
    return d;
  });
  m.def("prune",
        [](const ExperimentConfig& c, std::optional<std::filesystem::path> ckpt, std::optional<std::string> mode,
           std::optional<std::string> scope) {
          auto cfg = c;
          if (mode) cfg.prune.mode = prune_mode_from_string(*mode);
          if (scope) cfg.prune.scope = prune_scope_from_string(*scope);
          const auto r = cmd_prune(cfg, ckpt);
          auto d = prune_summary(r.result);
          d["checkpoint_path"] = r.checkpoint_path;
          d["trace_path"] = r.trace_path;
          d["report_path"] = r.report_path;
          return d;
        },
        py::arg("config"), py::arg("checkpoint") = py::none(), py::arg("mode") = py::none(),
        py::arg("scope") = py::none());
  m.def("evaluate", [](const ExperimentConfig& c, const std::filesystem::path& ckpt) {
    return to_python(cmd_eval(c, ckpt).record);
  }, py::arg("config"), py::arg("checkpoint"));

  m.def("sha256_hex", &sha256_hex);
}
