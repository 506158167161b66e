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

#include <cmath>

#include "delaysnn/training.hpp"

namespace delaysnn {

namespace {

// Gradient of the readout integrator; returns d loss / d (last hidden spikes).
Matrix readout_backward(const NetworkModel& model, const Tape& tape, const Matrix& dlogits, Gradients& g) {
  const auto& cfg = model.config();
  const std::size_t batch = tape.batch;
  const std::size_t steps = tape.steps;
  const double beta = cfg.lif.beta();
  const Matrix& x = tape.layers.empty() ? tape.input : tape.layers.back().s;

  Matrix gz(static_cast<Eigen::Index>(steps * batch), cfg.num_classes);
  Matrix gh = Matrix::Zero(static_cast<Eigen::Index>(batch), cfg.num_classes);
  for (std::size_t t = steps; t-- > 0;) {
    gh *= beta;
    if (cfg.readout == ReadoutMode::kSum || t + 1 == steps) gh += dlogits;
    time_step(gz, t, batch) = (1.0 - beta) * gh;
  }
  g.w_out.noalias() = x.transpose() * gz;
  g.b_out = gz.colwise().sum().transpose();
  return gz * model.readout().w_out.transpose();
}

// Backward through one hidden layer given d loss / d spikes from above.
// Returns d loss / d input spikes.
Matrix layer_backward(const NetworkModel& model, std::size_t li, const Tape& tape, const Matrix& grad_spikes,
                      LayerGrad& g) {
  const auto& cfg = model.config();
  const auto& layer = model.layers()[li];
  const auto& lt = tape.layers[li];
  const std::size_t batch = tape.batch;
  const std::size_t steps = tape.steps;
  const Eigen::Index n = layer.config.neurons;
  const auto b = static_cast<Eigen::Index>(batch);
  const double beta = cfg.lif.beta();
  const double v_th = cfg.lif.v_th;
  const double alpha = cfg.surrogate.alpha;
  const bool hard = cfg.lif.reset == ResetMode::kHard;
  const bool detach = cfg.numerics.detach_reset;
  const bool delay_grad = layer.delays.trainable;
  const Matrix& x_in = li == 0 ? tape.input : tape.layers[li - 1].s;
  const auto& table = lt.spread;

  // q(t) = K^T dL/dR(t), the gradient reaching the pre-kernel spread spikes that arrive at t.
  Matrix q = Matrix::Zero(static_cast<Eigen::Index>(steps * batch), n);
  Matrix gy(static_cast<Eigen::Index>(steps * batch), n);
  Matrix gh_next = Matrix::Zero(b, n);
  Matrix gs(b, n);
  Matrix gh(b, n);
  Matrix g_rec(b, n);
  Matrix arriving(b, n);
  Matrix dv_dh(b, n);

  for (std::size_t t = steps; t-- > 0;) {
    const auto s_t = time_step(lt.s, t, batch);
    const auto h_t = time_step(lt.h, t, batch);

    gs = time_step(grad_spikes, t, batch);
    for (const int tau : table.active) {
      const std::size_t arrive = t + static_cast<std::size_t>(tau);
      if (arrive >= steps) break;
      const auto q_arrive = time_step(q, arrive, batch);
      const auto& w = table.weight[static_cast<std::size_t>(tau)];
      gs.array() += q_arrive.array().rowwise() * w.transpose().array();
      if (delay_grad) {
        g.delays.array() += (s_t.array() * q_arrive.array()).colwise().sum().transpose() *
                            table.grad[static_cast<std::size_t>(tau)].array();
      }
    }

    const Matrix sg = h_t.unaryExpr([=](double x) { return surrogate_grad(x - v_th, alpha); });
    if (hard) {
      dv_dh = (1.0 - s_t.array()).matrix();
      if (!detach) dv_dh.array() -= h_t.array() * sg.array();
    } else {
      dv_dh.setOnes();
      if (!detach) dv_dh.array() -= v_th * sg.array();
    }
    gh.array() = gs.array() * sg.array() + beta * gh_next.array() * dv_dh.array();

    // I = mask_ff * y + mask_rec * R; dI/dH = (1 - beta).
    g_rec.array() = (1.0 - beta) * gh.array() * lt.mask_rec.array();
    time_step(gy, t, batch).array() = (1.0 - beta) * gh.array() * lt.mask_ff.array();
    apply_recurrent_transpose_add(layer.kernel, g_rec, time_step(q, t, batch));

    arriving.setZero();
    bool any = false;
    for (const int tau : table.active) {
      if (static_cast<std::size_t>(tau) > t) break;
      const auto s_src = time_step(lt.s, t - static_cast<std::size_t>(tau), batch);
      arriving.array() += s_src.array().rowwise() * table.weight[static_cast<std::size_t>(tau)].transpose().array();
      any = true;
    }
    if (any) accumulate_kernel_grad(layer.kernel, g_rec, arriving, g.w_dense, g.w_conv);
    gh_next = gh;
  }

  Matrix g_drive;
  if (layer.config.has_batchnorm) {
    g.gamma = (gy.array() * lt.xhat.array()).colwise().sum().transpose();
    g.beta = gy.colwise().sum().transpose();
    Matrix g_xhat = gy.array().rowwise() * layer.bn.gamma.transpose().array();
    if (model.mode() == Mode::kTrain) {
      const double count = static_cast<double>(g_xhat.rows());
      const Eigen::RowVectorXd sum_g = g_xhat.colwise().sum();
      const Eigen::RowVectorXd sum_gx = (g_xhat.array() * lt.xhat.array()).colwise().sum();
      g_drive = (count * g_xhat.array()).matrix();
      g_drive.rowwise() -= sum_g;
      g_drive.array() -= lt.xhat.array().rowwise() * sum_gx.array();
      g_drive.array().rowwise() *= (lt.inv_std.transpose().array() / count);
    } else {
      g_drive = g_xhat.array().rowwise() * lt.inv_std.transpose().array();
    }
  } else {
    g_drive = std::move(gy);
  }
  g.w_ff.noalias() = x_in.transpose() * g_drive;
  if (li == 0) return {};
  return g_drive * layer.w_ff.transpose();
}

}  // namespace

Gradients backward(const NetworkModel& model, const Tape& tape, const Matrix& dlogits) {
  if (tape.layers.size() != model.layers().size()) throw ShapeError("backward: tape does not match model");
  if (dlogits.rows() != static_cast<Eigen::Index>(tape.batch) || dlogits.cols() != model.config().num_classes) {
    throw ShapeError("backward: dlogits shape does not match tape");
  }
  for (std::size_t li = 0; li < tape.layers.size(); ++li) {
    if (tape.layers[li].s.cols() != model.layers()[li].config.neurons || tape.layers[li].h.size() == 0) {
      throw ShapeError("backward: tape layer " + std::to_string(li) + " does not match model");
    }
  }
  Gradients g = Gradients::zeros_like(model);
  Matrix grad_spikes = readout_backward(model, tape, dlogits, g);
  for (std::size_t li = model.layers().size(); li-- > 0;) {
    grad_spikes = layer_backward(model, li, tape, grad_spikes, g.layers[li]);
  }
  return g;
}

}  // namespace delaysnn
