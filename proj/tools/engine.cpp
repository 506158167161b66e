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

// engine: train, evaluate, benchmark and inspect delay SNN models.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 runtime failure,
// 3 check failure (grad-check).

#include <CLI11.hpp>

#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "delaysnn/bench.hpp"
#include "delaysnn/config.hpp"
#include "delaysnn/network.hpp"
#include "delaysnn/spike_data.hpp"
#include "delaysnn/training.hpp"

namespace {

using namespace delaysnn;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCheck = 3;

// Options shared by train and eval for building a RunConfig.
struct RunFlags {
  std::string preset;
  std::string config_path;
  std::optional<std::size_t> time_steps;
  std::optional<std::uint32_t> bin_factor;
  bool binarize = false;
  std::string pool;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("--preset", preset, "Start from a preset: shd, ssc or interval");
    app->add_option("--config", config_path, "Run configuration file (JSON); applied after --preset");
    app->add_option("--time-steps", time_steps, "Number of time bins T");
    app->add_option("--bin-factor", bin_factor, "Raw channels pooled per input channel");
    app->add_flag("--binarize", binarize, "Clamp binned spike counts to 1");
    app->add_option("--pool", pool, "Channel pooling: sum or max")->check(CLI::IsMember({"sum", "max"}));
    app->add_option("--seed", seed, "Random seed");
  }

  RunConfig build() const {
    RunConfig c = preset.empty() ? RunConfig{} : preset_config(preset);
    if (!config_path.empty()) {
      // Keys missing from the file keep the preset's values.
      std::ifstream in(config_path);
      if (!in) throw ConfigError("config", "cannot open " + config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      nlohmann::json base = to_json_value(c);
      base.merge_patch(nlohmann::json::parse(ss.str()));
      c = run_config_from_json(base);
    }
    if (time_steps) {
      c.bin.time_steps = *time_steps;
      c.synthetic.time_steps = *time_steps;
    }
    if (bin_factor) c.bin.bin_factor = *bin_factor;
    if (binarize) c.bin.binarize = true;
    if (pool == "max") c.bin.pool = ChannelPool::kMax;
    if (pool == "sum") c.bin.pool = ChannelPool::kSum;
    if (seed) c.seed = *seed;
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text << "\n";
}

std::string delay_table(const NetworkModel& model) {
  std::ostringstream out;
  char buf[128];
  out << "layer  mean      std       min  max\n";
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const DelayStats s = delay_stats(round_for_inference(model.layers()[l].delays));
    std::snprintf(buf, sizeof(buf), "%-5zu  %-8.3f  %-8.3f  %-3ld  %ld\n", l, s.mean, s.std, s.min, s.max);
    out << buf;
  }
  return out.str();
}

int cmd_train(const RunFlags& flags, int epochs, const std::string& ablation, const std::string& train_path,
              const std::string& valid_path, const std::string& test_path, const std::string& model_path,
              const std::string& report_path, bool quiet) {
  RunConfig c = flags.build();
  if (epochs > 0) c.optim.epochs = epochs;
  if (!train_path.empty()) c.train_path = train_path;
  if (!valid_path.empty()) c.valid_path = valid_path;
  if (!test_path.empty()) c.test_path = test_path;
  if (!model_path.empty()) c.model_path = model_path;
  if (!report_path.empty()) c.report_path = report_path;

  // fixed-mean / fixed-median: learnable run first, then retrain with every
  // delay frozen at the pooled statistic of the learned delays.
  std::optional<DelayStatistic> two_phase;
  if (ablation == "fixed-mean") {
    two_phase = DelayStatistic::kMean;
  } else if (ablation == "fixed-median") {
    two_phase = DelayStatistic::kMedian;
  } else if (!ablation.empty()) {
    c.ablation = ablation_from_string(ablation);
  }
  if (two_phase) c.ablation = AblationMode::learnable();
  c.validate();

  const TrainData data = load_train_data(c);
  auto log_epoch = [quiet](const EpochRecord& r) {
    if (!quiet) {
      std::printf("epoch %3d  sigma %8.4f  loss %.5f  train_acc %.4f", r.epoch, r.sigma, r.train_loss,
                  r.train_accuracy);
      if (r.valid_accuracy) std::printf("  valid_acc %.4f", *r.valid_accuracy);
      std::printf("\n");
      std::fflush(stdout);
    }
    return true;
  };

  auto run = [&](const RunConfig& rc) {
    NetworkModel model = NetworkModel::create(rc.network, rc.seed);
    TrainOptions options;
    options.optim = rc.optim;
    options.ablation = rc.ablation;
    options.seed = rc.seed;
    options.config_text = run_config_to_text(rc);
    options.on_epoch = log_epoch;
    TrainingReport report = train(model, data, options);
    return std::make_pair(std::move(model), std::move(report));
  };

  auto [model, report] = run(c);
  if (two_phase) {
    const double value = pooled_delay_statistic(model, *two_phase);
    std::printf("phase 1 pooled %s delay: %g\n", *two_phase == DelayStatistic::kMean ? "mean" : "median", value);
    c.ablation = AblationMode::fixed_value(value);
    std::tie(model, report) = run(c);
  }

  save_model(model, c.model_path);
  write_text(c.report_path, report_to_json(report));
  if (report.test_accuracy) std::printf("test_accuracy %.4f\n", *report.test_accuracy);
  std::printf("%s", delay_table(model).c_str());
  std::printf("model written to %s, report to %s\n", c.model_path.c_str(), c.report_path.c_str());
  return kExitOk;
}

int cmd_eval(const RunFlags& flags, const std::string& model_path, const std::string& data_path,
             const std::string& json_path) {
  NetworkModel model = load_model(model_path, true);
  RunConfig c = flags.build();
  const DatasetSplit split = read_event_file(data_path, "test");
  if (!flags.bin_factor && model.config().input_channels > 0 &&
      split.raw_channels % static_cast<std::uint32_t>(model.config().input_channels) == 0) {
    c.bin.bin_factor = split.raw_channels / static_cast<std::uint32_t>(model.config().input_channels);
  }
  const SpikeTensor x = bin_split(split, c.bin);
  if (x.channels() != static_cast<std::size_t>(model.config().input_channels)) {
    throw ShapeError("data has " + std::to_string(x.channels()) + " channels after binning, model expects " +
                     std::to_string(model.config().input_channels));
  }
  const auto labels = labels_of(split);
  for (const auto l : labels) {
    if (l >= static_cast<std::uint32_t>(model.config().num_classes)) {
      throw ShapeError("label " + std::to_string(l) + " outside the model's " +
                       std::to_string(model.config().num_classes) + " classes");
    }
  }
  std::vector<std::vector<std::int64_t>> confusion;
  const double acc = evaluate(model, x, labels, 64, &confusion);
  std::printf("samples %zu\naccuracy %.6f\nconfusion (rows: true class, columns: predicted)\n", labels.size(), acc);
  for (const auto& row : confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) std::printf(j ? " %lld" : "%lld", static_cast<long long>(row[j]));
    std::printf("\n");
  }
  if (!json_path.empty()) {
    write_text(json_path, nlohmann::json{{"samples", labels.size()}, {"accuracy", acc}, {"confusion", confusion}}.dump(2));
  }
  return kExitOk;
}

int cmd_stats(const std::string& model_path, bool json) {
  const NetworkModel model = load_model(model_path);
  if (json) {
    auto rows = nlohmann::json::array();
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      const DelayStats s = delay_stats(round_for_inference(model.layers()[l].delays));
      rows.push_back({{"layer", l}, {"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}});
    }
    std::printf("%s\n", rows.dump(2).c_str());
  } else {
    std::printf("%s", delay_table(model).c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent spiking networks with learnable axonal delays"};
  app.require_subcommand(1);

  RunFlags train_flags;
  int epochs = 0;
  std::string ablation, train_path, valid_path, test_path, model_out, report_out;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_flags.add_to(train_cmd);
  train_cmd->add_option("--epochs", epochs, "Override the number of epochs");
  train_cmd->add_option("--ablation", ablation,
                        "learnable, fixed-unit, fixed-value:<d>, fixed-mean or fixed-median");
  train_cmd->add_option("--train", train_path, "Training event file (default: generated interval task)");
  train_cmd->add_option("--valid", valid_path, "Validation event file");
  train_cmd->add_option("--test", test_path, "Test event file");
  train_cmd->add_option("--model", model_out, "Where to write the trained model");
  train_cmd->add_option("--report", report_out, "Where to write the training report (JSON)");
  train_cmd->add_flag("--quiet", quiet, "No per-epoch lines");

  RunFlags eval_flags;
  std::string eval_model, eval_data, eval_json;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on an event file");
  eval_flags.add_to(eval_cmd);
  eval_cmd->add_option("--model", eval_model, "Model file")->required();
  eval_cmd->add_option("--data", eval_data, "Event file")->required();
  eval_cmd->add_option("--json", eval_json, "Also write accuracy and confusion counts as JSON");

  BenchConfig bench;
  std::string bench_json;
  int threads = 1;
  auto* bench_cmd = app.add_subcommand("bench", "Time dense against conv recurrence in eval mode");
  bench_cmd->add_option("--neurons", bench.neurons, "Neurons per layer")->capture_default_str();
  bench_cmd->add_option("--layers", bench.layers, "Hidden layers")->capture_default_str();
  bench_cmd->add_option("--time-steps", bench.steps, "Time steps")->capture_default_str();
  bench_cmd->add_option("--batch", bench.batch, "Batch size")->capture_default_str();
  bench_cmd->add_option("--k", bench.k, "Conv kernel size")->capture_default_str();
  bench_cmd->add_option("--channels", bench.input_channels, "Input channels")->capture_default_str();
  bench_cmd->add_option("--d-max", bench.d_max, "Delay cap")->capture_default_str();
  bench_cmd->add_option("--input-rate", bench.input_rate, "Input spike probability per bin")->capture_default_str();
  bench_cmd->add_option("--repetitions", bench.repetitions, "Timed repetitions (>= 5)")->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup, "Discarded warm-up runs")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  bench_cmd->add_option("--threads", threads, "Eigen threads")->capture_default_str();
  bench_cmd->add_option("--json", bench_json, "Also write the report as JSON");

  std::string stats_model;
  bool stats_json = false;
  auto* stats_cmd = app.add_subcommand("stats", "Per-layer delay statistics of a model");
  stats_cmd->add_option("--model", stats_model, "Model file")->required();
  stats_cmd->add_flag("--json", stats_json, "JSON instead of a table");

  IntervalTaskParams gen;
  std::string gen_kind = "interval", gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic event file");
  gen_cmd->add_option("--kind", gen_kind, "Dataset kind")->check(CLI::IsMember({"interval"}));
  gen_cmd->add_option("--out", gen_out, "Output event file")->required();
  gen_cmd->add_option("--n-samples", gen.n_samples, "Samples")->capture_default_str();
  gen_cmd->add_option("--time-steps", gen.time_steps, "Time steps")->capture_default_str();
  gen_cmd->add_option("--channels", gen.channels, "Channels")->capture_default_str();
  gen_cmd->add_option("--lag-a", gen.lag_a, "Echo lag of class 0")->capture_default_str();
  gen_cmd->add_option("--lag-b", gen.lag_b, "Echo lag of class 1")->capture_default_str();
  gen_cmd->add_option("--class1-fraction", gen.class1_fraction, "Fraction of class 1 samples")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();

  double gc_sigma = 2.0, gc_weight_tol = 1e-4, gc_delay_tol = 1e-3;
  std::string gc_kernel = "conv";
  std::uint64_t gc_seed = 0;
  std::size_t gc_neurons = 8, gc_steps = 20;
  auto* gc_cmd = app.add_subcommand("grad-check", "Compare backward against central finite differences");
  gc_cmd->add_option("--sigma", gc_sigma, "Spread width")->capture_default_str();
  gc_cmd->add_option("--kernel", gc_kernel, "dense or conv")->check(CLI::IsMember({"dense", "conv"}));
  gc_cmd->add_option("--neurons", gc_neurons, "Neurons per layer")->capture_default_str();
  gc_cmd->add_option("--time-steps", gc_steps, "Time steps")->capture_default_str();
  gc_cmd->add_option("--weight-tol", gc_weight_tol, "Tolerance for weight groups")->capture_default_str();
  gc_cmd->add_option("--delay-tol", gc_delay_tol, "Tolerance for the delay group")->capture_default_str();
  gc_cmd->add_option("--seed", gc_seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      return cmd_train(train_flags, epochs, ablation, train_path, valid_path, test_path, model_out, report_out,
                       quiet);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_flags, eval_model, eval_data, eval_json);
    if (bench_cmd->parsed()) {
      Eigen::setNbThreads(threads);
      const BenchReport report = run_bench(bench);
      std::printf("threads %d\n%s", threads, report.to_text().c_str());
      if (!bench_json.empty()) {
        auto j = nlohmann::json::parse(report.to_json());
        j["config"]["threads"] = threads;
        write_text(bench_json, j.dump(2));
      }
      return kExitOk;
    }
    if (stats_cmd->parsed()) return cmd_stats(stats_model, stats_json);
    if (gen_cmd->parsed()) {
      write_event_file(gen_out, make_interval_task(gen));
      std::printf("wrote %zu samples to %s\n", gen.n_samples, gen_out.c_str());
      return kExitOk;
    }
    if (gc_cmd->parsed()) {
      GradCheckSpec spec = default_grad_check_spec(gc_sigma, kernel_kind_from_string(gc_kernel));
      for (auto& l : spec.network.layers) l.neurons = static_cast<Eigen::Index>(gc_neurons);
      spec.steps = gc_steps;
      const GradCheckReport report = grad_check(spec, gc_weight_tol, gc_delay_tol, gc_seed);
      std::printf("%s", report.to_text().c_str());
      return report.passed() ? kExitOk : kExitCheck;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
