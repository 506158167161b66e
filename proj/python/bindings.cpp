// Copyright 2026 The delaysnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>

#include "delaysnn/bench.hpp"
#include "delaysnn/config.hpp"
#include "delaysnn/delay.hpp"
#include "delaysnn/network.hpp"
#include "delaysnn/recurrent.hpp"
#include "delaysnn/spike_data.hpp"
#include "delaysnn/training.hpp"

namespace py = pybind11;
using namespace delaysnn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

SpikeTensor tensor_from(const Array& x) {
  if (x.ndim() != 3) throw ShapeError("expected a (batch, time, channels) array");
  SpikeTensor t(static_cast<std::size_t>(x.shape(0)), static_cast<std::size_t>(x.shape(1)),
                static_cast<std::size_t>(x.shape(2)));
  std::copy(x.data(), x.data() + x.size(), t.data().begin());
  return t;
}

Array array_from(const SpikeTensor& t) {
  Array out({t.batch(), t.steps(), t.channels()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Array array_from(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.mutable_at(i, j) = m(i, j);
  return out;
}

py::dict stats_dict(const DelayStats& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["std"] = s.std;
  d["min"] = s.min;
  d["max"] = s.max;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Recurrent spiking networks with learnable axonal delays";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def(
      "count_recurrent_params",
      [](const std::string& kind, std::int64_t n, std::int64_t k) {
        const auto c = count_recurrent_params(kernel_kind_from_string(kind), n, k);
        py::dict d;
        d["weights"] = c.weights;
        d["delays"] = c.delays;
        d["total"] = c.total;
        return d;
      },
      py::arg("kind"), py::arg("neurons"), py::arg("k") = 3);

  m.def("spread", &spread, py::arg("tau"), py::arg("d"), py::arg("sigma"));
  m.def(
      "anneal",
      [](double sigma, double decay, double floor) { return anneal({sigma, sigma, decay, floor}).sigma; },
      py::arg("sigma"), py::arg("decay"), py::arg("floor") = 0.01);

  m.def(
      "preset", [](const std::string& name) { return run_config_to_text(preset_config(name)); }, py::arg("name"),
      "Preset run configuration as JSON text.");

  m.def(
      "write_interval_task",
      [](const std::string& path, std::size_t n_samples, std::uint64_t seed, double class1_fraction) {
        IntervalTaskParams p;
        p.n_samples = n_samples;
        p.seed = seed;
        p.class1_fraction = class1_fraction;
        write_event_file(path, make_interval_task(p));
      },
      py::arg("path"), py::arg("n_samples") = 512, py::arg("seed") = 0, py::arg("class1_fraction") = 0.5);

  m.def(
      "load_binned",
      [](const std::string& path, std::size_t time_steps, std::uint32_t bin_factor, bool binarize) {
        const DatasetSplit split = read_event_file(path);
        const SpikeTensor x = bin_split(split, {time_steps, bin_factor, binarize, ChannelPool::kSum});
        return std::make_pair(array_from(x), labels_of(split));
      },
      py::arg("path"), py::arg("time_steps"), py::arg("bin_factor") = 1, py::arg("binarize") = false,
      "Read an event file and bin it; returns (array of shape (B, T, C), labels).");

  m.def(
      "grad_check",
      [](double sigma, const std::string& kind, std::uint64_t seed) {
        const GradCheckReport r = grad_check(default_grad_check_spec(sigma, kernel_kind_from_string(kind)), 1e-4,
                                             1e-3, seed);
        return std::make_pair(r.passed(), r.to_text());
      },
      py::arg("sigma") = 2.0, py::arg("kind") = "conv", py::arg("seed") = 0);

  m.def(
      "bench",
      [](Eigen::Index neurons, std::size_t steps, std::size_t batch, std::size_t repetitions, std::uint64_t seed) {
        BenchConfig c;
        c.neurons = neurons;
        c.steps = steps;
        c.batch = batch;
        c.repetitions = repetitions;
        c.seed = seed;
        py::gil_scoped_release release;
        return run_bench(c).to_json();
      },
      py::arg("neurons") = 256, py::arg("steps") = 100, py::arg("batch") = 8, py::arg("repetitions") = 5,
      py::arg("seed") = 0, "Dense against conv timing; returns the report as JSON text.");

  py::class_<NetworkModel>(m, "Model")
      .def_static(
          "create",
          [](const std::string& network_json, std::uint64_t seed) {
            return NetworkModel::create(network_config_from_json(nlohmann::json::parse(network_json)), seed);
          },
          py::arg("network_json"), py::arg("seed") = 0)
      .def_static("load", [](const std::string& path, bool round) { return load_model(path, round); },
                  py::arg("path"), py::arg("round_delays") = false)
      .def("save", [](const NetworkModel& model, const std::string& path) { save_model(model, path); })
      .def_property_readonly("network_json",
                             [](const NetworkModel& model) { return to_json_value(model.config()).dump(); })
      .def_property_readonly("num_layers", [](const NetworkModel& model) { return model.layers().size(); })
      .def(
          "forward",
          [](NetworkModel& model, const Array& x, bool train) {
            const Mode saved = model.mode();
            model.set_mode(train ? Mode::kTrain : Mode::kEval);
            const Matrix logits = forward(model, tensor_from(x));
            model.set_mode(saved);
            return array_from(logits);
          },
          py::arg("x"), py::arg("train") = false, "Logits (B, N_c) for an input of shape (B, T, C).")
      .def(
          "delays",
          [](const NetworkModel& model, std::size_t layer) {
            if (layer >= model.layers().size()) throw py::index_error("layer out of range");
            const Vector& d = model.layers()[layer].delays.d;
            return std::vector<double>(d.data(), d.data() + d.size());
          },
          py::arg("layer"))
      .def("delay_stats",
           [](const NetworkModel& model) {
             py::list rows;
             for (const auto& l : model.layers()) rows.append(stats_dict(delay_stats(round_for_inference(l.delays))));
             return rows;
           })
      .def("param_counts", [](const NetworkModel& model) {
        const ParamBreakdown p = count_params(model);
        py::dict d;
        d["feedforward"] = p.feedforward;
        d["recurrent_weights"] = p.recurrent_weights;
        d["delays"] = p.delays;
        d["batchnorm"] = p.batchnorm;
        d["readout"] = p.readout;
        d["total"] = p.total;
        return d;
      });

  m.def(
      "train",
      [](const std::string& config_json) {
        const RunConfig c = run_config_from_text(config_json);
        c.validate();
        py::gil_scoped_release release;
        const TrainData data = load_train_data(c);
        NetworkModel model = NetworkModel::create(c.network, c.seed);
        TrainOptions o;
        o.optim = c.optim;
        o.ablation = c.ablation;
        o.seed = c.seed;
        o.config_text = run_config_to_text(c);
        const TrainingReport report = train(model, data, o);
        return std::make_pair(std::move(model), report_to_json(report));
      },
      py::arg("config_json"), "Train from a run configuration; returns (model, report JSON text).");
}
