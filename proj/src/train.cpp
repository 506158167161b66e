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
#include <numeric>

#include <nlohmann/json.hpp>

#include "delaysnn/training.hpp"

namespace delaysnn {

namespace {

void check_labels(const Matrix& logits, const std::vector<std::uint32_t>& labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) throw ShapeError("logits/labels batch mismatch");
  for (const auto l : labels) {
    if (static_cast<Eigen::Index>(l) >= logits.cols()) {
      throw ConfigError("labels", "label " + std::to_string(l) + " out of range for " +
                                      std::to_string(logits.cols()) + " classes");
    }
  }
}

std::vector<LayerDelayRecord> layer_delay_records(const NetworkModel& model) {
  std::vector<LayerDelayRecord> out;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    out.push_back({i, delay_stats(model.layers()[i].delays)});
  }
  return out;
}

nlohmann::json delays_json(const std::vector<LayerDelayRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"layer", r.layer},
                   {"mean", r.stats.mean},
                   {"std", r.stats.std},
                   {"min", r.stats.min},
                   {"max", r.stats.max}});
  }
  return arr;
}

}  // namespace

double loss_ce(const Matrix& logits, const std::vector<std::uint32_t>& labels) {
  check_labels(logits, labels);
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    const double mx = logits.row(b).maxCoeff();
    const double lse = mx + std::log((logits.row(b).array() - mx).exp().sum());
    total += lse - logits(b, labels[static_cast<std::size_t>(b)]);
  }
  return total / static_cast<double>(labels.size());
}

Matrix loss_ce_grad(const Matrix& logits, const std::vector<std::uint32_t>& labels) {
  check_labels(logits, labels);
  Matrix grad(logits.rows(), logits.cols());
  const double inv_b = labels.empty() ? 0.0 : 1.0 / static_cast<double>(labels.size());
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    const double mx = logits.row(b).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(b).array() - mx).exp();
    grad.row(b) = e / e.sum();
    grad(b, labels[static_cast<std::size_t>(b)]) -= 1.0;
  }
  return grad * inv_b;
}

std::vector<std::uint32_t> predict(const Matrix& logits) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    Eigen::Index arg = 0;
    logits.row(b).maxCoeff(&arg);
    out[static_cast<std::size_t>(b)] = static_cast<std::uint32_t>(arg);
  }
  return out;
}

std::size_t count_correct(const Matrix& logits, const std::vector<std::uint32_t>& labels) {
  const auto pred = predict(logits);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels.at(i) ? 1 : 0;
  return correct;
}

void apply_ablation(NetworkModel& model, const AblationMode& ablation) {
  if (ablation.kind == AblationKind::kLearnable) return;
  const double value = ablation.kind == AblationKind::kFixedUnit ? 1.0 : ablation.value;
  if (!(value >= 0.0 && value <= model.config().d_max)) {
    throw ConfigError("ablation.value", "fixed delay must lie in [0, d_max]");
  }
  auto& cfg = model.mutable_config();
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    auto& layer = model.layers()[i];
    layer.delays.d.setConstant(value);
    layer.delays.trainable = false;
    layer.config.delay_mode = DelayMode::kFixed;
    layer.config.fixed_delay = value;
    cfg.layers[i] = layer.config;
  }
}

double evaluate(NetworkModel& model, const SpikeTensor& data, const std::vector<std::uint32_t>& labels,
                std::size_t batch_size, std::vector<std::vector<std::int64_t>>* confusion) {
  if (labels.size() != data.batch()) throw ShapeError("evaluate: labels do not match data");
  const Mode saved = model.mode();
  model.set_mode(Mode::kEval);
  const auto classes = static_cast<std::size_t>(model.config().num_classes);
  if (confusion) confusion->assign(classes, std::vector<std::int64_t>(classes, 0));
  std::size_t correct = 0;
  try {
    for (const auto& idx : batch_order(data.batch(), batch_size, false, 0)) {
      const auto x = data.gather(idx);
      const Matrix logits = forward(model, x);
      const auto pred = predict(logits);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto truth = labels[idx[i]];
        correct += pred[i] == truth ? 1 : 0;
        if (confusion) (*confusion).at(truth).at(pred[i]) += 1;
      }
    }
  } catch (...) {
    model.set_mode(saved);
    throw;
  }
  model.set_mode(saved);
  return data.batch() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.batch());
}

double pooled_delay_statistic(const NetworkModel& model, DelayStatistic stat) {
  std::vector<double> all;
  for (const auto& l : model.layers()) {
    const Vector r = round_for_inference(l.delays).d;
    all.insert(all.end(), r.data(), r.data() + r.size());
  }
  if (all.empty()) throw Error("model has no delays");
  if (stat == DelayStatistic::kMean) return std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
  std::sort(all.begin(), all.end());
  const std::size_t mid = all.size() / 2;
  return all.size() % 2 == 1 ? all[mid] : 0.5 * (all[mid - 1] + all[mid]);
}

TrainingReport train(NetworkModel& model, const TrainData& data, const TrainOptions& options) {
  options.optim.validate();
  if (data.train_labels.size() != data.train.batch()) throw ShapeError("train: labels do not match data");
  apply_ablation(model, options.ablation);

  TrainingReport report;
  report.config_text = options.config_text;
  Optimizer optimizer(options.optim);
  model.set_mode(Mode::kTrain);
  model.reseed_dropout(mix_seed(options.seed, 0));

  for (int epoch = 1; epoch <= options.optim.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.sigma = model.sigma();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    const auto order = batch_order(data.train.batch(), options.optim.batch_size, true,
                                   mix_seed(options.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t bi = 0; bi < order.size(); ++bi) {
      const auto& idx = order[bi];
      const auto x = data.train.gather(idx);
      std::vector<std::uint32_t> labels;
      labels.reserve(idx.size());
      for (const auto i : idx) labels.push_back(data.train_labels[i]);

      Tape tape;
      Matrix logits;
      try {
        logits = forward(model, x, &tape);
      } catch (const NumericError& e) {
        throw NumericError("diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi) + ": " +
                           e.what());
      }
      const double loss = loss_ce(logits, labels);
      if (!std::isfinite(loss)) {
        throw NumericError("loss is not finite at epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi));
      }
      Gradients grads = backward(model, tape, loss_ce_grad(logits, labels));
      optimizer.step(model, grads);
      loss_sum += loss * static_cast<double>(idx.size());
      correct += count_correct(logits, labels);
    }
    rec.batches = order.size();
    report.total_batches += order.size();
    const auto n = static_cast<double>(data.train.batch());
    rec.train_loss = n > 0 ? loss_sum / n : 0.0;
    rec.train_accuracy = n > 0 ? static_cast<double>(correct) / n : 0.0;
    if (data.valid) {
      rec.valid_accuracy = evaluate(model, *data.valid, data.valid_labels, options.optim.batch_size);
    }
    rec.delays = layer_delay_records(model);
    model.mutable_config().sigma = anneal(model.config().sigma);
    report.epochs.push_back(rec);
    if (options.on_epoch && !options.on_epoch(rec)) break;
  }
  if (data.test) report.test_accuracy = evaluate(model, *data.test, data.test_labels, options.optim.batch_size);
  report.final_delays = layer_delay_records(model);
  return report;
}

std::string report_to_json(const TrainingReport& report, bool include_config) {
  nlohmann::json j;
  if (include_config) {
    j["config"] = report.config_text.empty() ? nlohmann::json(nullptr)
                                             : nlohmann::json::parse(report.config_text, nullptr, false);
    if (j["config"].is_discarded()) j["config"] = report.config_text;
  }
  auto epochs = nlohmann::json::array();
  for (const auto& e : report.epochs) {
    nlohmann::json r{{"epoch", e.epoch},
                     {"sigma", e.sigma},
                     {"train_loss", e.train_loss},
                     {"train_accuracy", e.train_accuracy},
                     {"batches", e.batches},
                     {"delays", delays_json(e.delays)}};
    r["valid_accuracy"] = e.valid_accuracy ? nlohmann::json(*e.valid_accuracy) : nlohmann::json(nullptr);
    epochs.push_back(std::move(r));
  }
  j["epochs"] = std::move(epochs);
  j["total_batches"] = report.total_batches;
  j["test_accuracy"] = report.test_accuracy ? nlohmann::json(*report.test_accuracy) : nlohmann::json(nullptr);
  j["final_delays"] = delays_json(report.final_delays);
  return j.dump(2);
}

}  // namespace delaysnn
