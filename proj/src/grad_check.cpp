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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "delaysnn/training.hpp"

namespace delaysnn {

GradCheckSpec default_grad_check_spec(double sigma, KernelKind kind) {
  GradCheckSpec spec;
  auto& net = spec.network;
  net.input_channels = 6;
  net.num_classes = 3;
  LayerConfig layer;
  layer.neurons = 8;
  layer.kernel_kind = kind;
  layer.k = 3;
  layer.dropout_ff = 0.2;
  layer.dropout_rec = 0.2;
  net.layers = {layer, layer};
  net.lif = {2.0, 1.0, ResetMode::kHard, false};
  net.d_max = 8;
  net.delay_init = DelayInit::kUniform;
  net.sigma = {sigma, sigma, 0.95, 0.01};
  net.numerics = {true, false};
  spec.batch = 2;
  spec.steps = 20;
  return spec;
}

bool GradCheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const GradCheckGroup& g) { return g.passed(); });
}

std::string GradCheckReport::to_text() const {
  std::ostringstream out;
  char buf[160];
  out << "group      checked  max_rel_error  tolerance  status\n";
  for (const auto& g : groups) {
    std::snprintf(buf, sizeof(buf), "%-10s %7zu  %13.3e  %9.1e  %s", g.name.c_str(), g.checked, g.max_rel_error,
                  g.tolerance, g.skipped ? "skipped" : (g.passed() ? "ok" : "FAIL"));
    out << buf;
    if (!g.note.empty()) out << "  (" << g.note << ")";
    out << "\n";
  }
  return out.str();
}

GradCheckReport grad_check(const GradCheckSpec& spec, double weight_tolerance, double delay_tolerance,
                           std::uint64_t seed) {
  NetworkConfig net = spec.network;
  net.numerics.smooth_forward = true;
  net.numerics.detach_reset = false;
  NetworkModel model = NetworkModel::create(net, seed);
  model.set_mode(Mode::kTrain);
  const double sigma = model.sigma();

  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  SpikeTensor input(spec.batch, spec.steps, static_cast<std::size_t>(net.input_channels), true);
  std::bernoulli_distribution fire(spec.input_rate);
  for (double& v : input.data()) v = fire(rng) ? 1.0 : 0.0;
  std::vector<std::uint32_t> labels(spec.batch);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(net.num_classes - 1));
  for (auto& l : labels) l = pick(rng);
  const Matrix x = input.to_time_major();
  const std::uint64_t dropout_seed = seed + 17;

  auto loss_at = [&]() {
    model.reseed_dropout(dropout_seed);
    return loss_ce(forward_time_major(model, x, spec.batch), labels);
  };

  model.reseed_dropout(dropout_seed);
  Tape tape;
  const Matrix logits = forward_time_major(model, x, spec.batch, &tape);
  Gradients grads = backward(model, tape, loss_ce_grad(logits, labels));

  auto params = model.parameters();
  auto gviews = grads.views(model);

  const std::map<std::string, std::string> group_of = {{"w_ff", "w_ff"},     {"bn", "batchnorm"},
                                                       {"w_rec", "recurrent"}, {"w_conv", "recurrent"},
                                                       {"readout", "readout"}, {"delays", "delays"}};
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> coords;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = group_of.at(params[i].kind);
    if (!coords.count(name)) order.push_back(name);
    auto& list = coords[name];
    if (params[i].group == ParamGroup::kDelays &&
        !model.layers()[static_cast<std::size_t>(params[i].layer)].delays.trainable) {
      continue;
    }
    for (std::size_t j = 0; j < params[i].values.size(); ++j) list.emplace_back(i, j);
  }

  GradCheckReport report;
  for (const auto& name : order) {
    GradCheckGroup group;
    group.name = name;
    const bool is_delay = name == "delays";
    group.tolerance = is_delay ? delay_tolerance : weight_tolerance;
    auto list = coords[name];
    if (is_delay && sigma == 0.0) {
      group.skipped = true;
      group.note = "sigma = 0: spread is piecewise constant in d with kinks at every integer";
      report.groups.push_back(group);
      continue;
    }
    if (list.empty()) {
      group.skipped = true;
      group.note = "no trainable coordinates";
      report.groups.push_back(group);
      continue;
    }
    if (list.size() > spec.max_coords_per_group) {
      std::shuffle(list.begin(), list.end(), rng);
      list.resize(spec.max_coords_per_group);
    }
    std::size_t excluded = 0;
    for (const auto& [pi, j] : list) {
      double& p = params[pi].values[j];
      if (is_delay && distance_to_kink(p, sigma) < spec.kink_margin) {
        ++excluded;
        continue;
      }
      const double saved = p;
      p = saved + spec.epsilon;
      const double up = loss_at();
      p = saved - spec.epsilon;
      const double down = loss_at();
      p = saved;
      const double numeric = (up - down) / (2.0 * spec.epsilon);
      const double analytic = gviews[pi].values[j];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), spec.abs_floor});
      group.max_rel_error = std::max(group.max_rel_error, std::abs(numeric - analytic) / scale);
      ++group.checked;
    }
    if (excluded > 0) group.note = std::to_string(excluded) + " coordinates within kink margin excluded";
    report.groups.push_back(group);
  }
  return report;
}

}  // namespace delaysnn
