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

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "delaysnn/network.hpp"
#include "delaysnn/spike_data.hpp"
#include "delaysnn/training.hpp"

namespace delaysnn {

// Every knob of a run. Serialised as JSON; missing keys take the defaults below.
struct RunConfig {
  std::string preset = "custom";
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  BinOptions bin{};
  NetworkConfig network{};
  OptimConfig optim{};
  AblationMode ablation{};
  std::uint64_t seed = 0;
  std::string model_path = "model.dsnn";
  std::string report_path = "report.json";
  IntervalTaskParams synthetic{};

  void validate() const;
};

// "shd", "ssc" or "interval".
RunConfig preset_config(const std::string& name);

nlohmann::json to_json_value(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
std::string run_config_to_text(const RunConfig& config);
RunConfig run_config_from_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json_value(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);

// Binned splits for a run: the event files named in the config, or, when no
// train file is given, interval-task splits generated from config.synthetic
// (train: n_samples, valid: n_samples / 4, test: n_samples / 2).
TrainData load_train_data(const RunConfig& config);

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);
std::string to_string(const AblationMode& mode);
AblationMode ablation_from_string(const std::string& s);

}  // namespace delaysnn
