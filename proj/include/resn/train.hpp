#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "resn/data.hpp"
#include "resn/errors.hpp"
#include "resn/rnn.hpp"

namespace resn {

namespace detail {

inline void check_metric_inputs(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw shape_error("metric inputs", y.size(), yhat.size());
  if (y.empty()) throw invalid_argument("metrics need at least one value");
}

}  // namespace detail

inline double mae(std::span<const double> y, std::span<const double> yhat) {
  detail::check_metric_inputs(y, yhat);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y[i] - yhat[i]);
  return sum / static_cast<double>(y.size());
}

inline double mse(std::span<const double> y, std::span<const double> yhat) {
  detail::check_metric_inputs(y, yhat);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return sum / static_cast<double>(y.size());
}

/// Mean absolute percentage error, in percent. Every y must be nonzero.
inline double mape(std::span<const double> y, std::span<const double> yhat) {
  detail::check_metric_inputs(y, yhat);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) throw invalid_argument("mape: target " + std::to_string(i) + " is zero");
    sum += std::abs((y[i] - yhat[i]) / y[i]);
  }
  return 100.0 * sum / static_cast<double>(y.size());
}

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 1000;

  void validate() const {
    if (!(learning_rate > 0.0)) throw invalid_argument("AdamConfig: learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw invalid_argument("AdamConfig: beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw invalid_argument("AdamConfig: beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw invalid_argument("AdamConfig: epsilon must be positive");
    if (epochs < 1) throw invalid_argument("AdamConfig: epochs must be >= 1");
  }

  bool operator==(const AdamConfig&) const = default;
};

/// First/second moment estimates and the number of steps taken so far.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step_count = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

/// One bias-corrected Adam update, in place.
inline void adam_step(std::span<double> weights, std::span<const double> gradient, AdamState& state,
                      const AdamConfig& cfg) {
  if (gradient.size() != weights.size()) throw shape_error("adam_step gradient", weights.size(), gradient.size());
  if (state.m.size() != weights.size()) throw shape_error("adam_step first moment", weights.size(), state.m.size());
  if (state.v.size() != weights.size()) throw shape_error("adam_step second moment", weights.size(), state.v.size());
  const auto k = static_cast<double>(++state.step_count);
  const double c1 = 1.0 - std::pow(cfg.beta1, k);
  const double c2 = 1.0 - std::pow(cfg.beta2, k);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double g = gradient[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    weights[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

struct LossAndGradient {
  double loss = 0.0;  // MSE
  std::vector<double> gradient;
};

namespace detail {

/// MSE over the batch, its gradient (BPTT) written into `grad`, and the
/// batch predictions written into `predictions`.
inline double mse_backprop(const Architecture& arch, const Layout& lay, std::span<const double> w,
                           const Matrix& stacked_inputs, std::span<const double> targets, std::span<double> grad,
                           std::vector<double>& predictions) {
  const auto B = static_cast<Eigen::Index>(targets.size());
  const auto T = static_cast<Eigen::Index>(arch.look_back);
  Tape tape;
  Matrix out = forward_batch(arch, lay, w, stacked_inputs, targets.size(), &tape);
  predictions.assign(out.data(), out.data() + B);

  Eigen::Map<const Eigen::RowVectorXd> y(targets.data(), B);
  Eigen::RowVectorXd err = out.row(0) - y;
  const double loss = err.squaredNorm() / static_cast<double>(B);
  Eigen::RowVectorXd d_out = (2.0 / static_cast<double>(B)) * err;

  std::fill(grad.begin(), grad.end(), 0.0);
  const auto& top = tape.layers.back();
  const auto Htop = top.hidden.rows();
  Matrix last_hidden = top.hidden.middleCols((T - 1) * B, B);
  const Matrix d_readout = d_out * last_hidden.transpose();
  WeightMap(grad.data() + lay.readout_weights, 1, Htop) = d_readout;
  grad[lay.readout_bias] = d_out.sum();

  const RowMajorMatrix wout = ConstWeightMap(w.data() + lay.readout_weights, 1, Htop);
  Matrix d_from_above = Matrix::Zero(Htop, T * B);
  d_from_above.middleCols((T - 1) * B, B) = wout.transpose() * d_out;

  for (std::size_t li = lay.layers.size(); li-- > 0;) {
    const auto& l = lay.layers[li];
    const auto& tp = tape.layers[li];
    const auto H = static_cast<Eigen::Index>(l.hidden);
    const auto I = static_cast<Eigen::Index>(l.inputs);
    const RowMajorMatrix wx = ConstWeightMap(w.data() + l.input_weights, 4 * H, I);
    const RowMajorMatrix wh = ConstWeightMap(w.data() + l.recurrent_weights, 4 * H, H);

    Matrix dz(4 * H, T * B);
    Matrix dh_next = Matrix::Zero(H, B);
    Matrix dc_next = Matrix::Zero(H, B);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const auto cols = [&](const Matrix& m, Eigen::Index r0, Eigen::Index rows) {
        return m.block(r0, t * B, rows, B).array();
      };
      auto gi = cols(tp.gates, 0, H);
      auto gf = cols(tp.gates, H, H);
      auto gg = cols(tp.gates, 2 * H, H);
      auto go = cols(tp.gates, 3 * H, H);
      auto tc = cols(tp.cell_tanh, 0, H);

      Eigen::ArrayXXd dh = d_from_above.middleCols(t * B, B).array() + dh_next.array();
      Eigen::ArrayXXd dc = dh * go * (1.0 - tc * tc) + dc_next.array();
      dz.block(0, t * B, H, B) = (dc * gg * gi * (1.0 - gi)).matrix();
      if (t > 0) {
        auto c_prev = tp.cell.middleCols((t - 1) * B, B).array();
        dz.block(H, t * B, H, B) = (dc * c_prev * gf * (1.0 - gf)).matrix();
      } else {
        dz.block(H, t * B, H, B).setZero();
      }
      dz.block(2 * H, t * B, H, B) = (dc * gi * (1.0 - gg * gg)).matrix();
      dz.block(3 * H, t * B, H, B) = (dh * tc * go * (1.0 - go)).matrix();
      dc_next = (dc * gf).matrix();
      if (t > 0) dh_next.noalias() = wh.transpose() * dz.middleCols(t * B, B);
    }

    const Matrix d_wx = dz * tp.inputs.transpose();
    WeightMap(grad.data() + l.input_weights, 4 * H, I) = d_wx;
    if (T > 1) {
      const Matrix d_wh = dz.rightCols((T - 1) * B) * tp.hidden.leftCols((T - 1) * B).transpose();
      WeightMap(grad.data() + l.recurrent_weights, 4 * H, H) = d_wh;
    }
    const Eigen::VectorXd d_b = dz.rowwise().sum();
    Eigen::Map<Eigen::VectorXd>(grad.data() + l.bias, 4 * H) = d_b;
    if (li > 0) d_from_above = wx.transpose() * dz;
  }
  return loss;
}

inline void check_training_shapes(const Architecture& arch, const WeightVector& weights, const WindowedSet& data) {
  check_weights(arch, weights);
  if (data.look_back != arch.look_back) throw shape_error("windowed set look_back", arch.look_back, data.look_back);
  if (data.size() == 0) throw invalid_argument("training needs at least one pair");
}

}  // namespace detail

/// MSE over all pairs and its exact gradient by backpropagation through time.
inline LossAndGradient loss_and_gradient(const Architecture& arch, const WeightVector& weights,
                                         const WindowedSet& windowed) {
  detail::check_training_shapes(arch, weights, windowed);
  const auto lay = detail::layout_of(arch);
  LossAndGradient out;
  out.gradient.resize(weights.size());
  std::vector<double> predictions;
  out.loss = detail::mse_backprop(arch, lay, weights.values,
                                  detail::stack_inputs(windowed.input_values, arch.look_back, windowed.size()),
                                  windowed.targets, out.gradient, predictions);
  return out;
}

struct TrainReport {
  WeightVector final_weights;
  std::vector<double> loss_history;  // training MAE after each epoch
  double initial_mae = 0.0;
  double wall_time = 0.0;  // seconds
};

/// Full-batch Adam on the MSE loss for cfg.epochs epochs.
inline TrainReport train_adam(const Architecture& arch, const WeightVector& init_weights, const WindowedSet& train,
                              const AdamConfig& cfg) {
  cfg.validate();
  detail::check_training_shapes(arch, init_weights, train);
  const auto start = std::chrono::steady_clock::now();
  const auto lay = detail::layout_of(arch);
  const auto inputs = detail::stack_inputs(train.input_values, arch.look_back, train.size());

  TrainReport report;
  report.final_weights = init_weights;
  report.loss_history.reserve(cfg.epochs);
  auto& w = report.final_weights.values;
  std::vector<double> grad(w.size());
  std::vector<double> predictions;
  AdamState state = AdamState::zeros(w.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    detail::mse_backprop(arch, lay, w, inputs, train.targets, grad, predictions);
    // predictions come from the weights before this epoch's update, i.e.
    // after the previous epoch.
    if (epoch == 0)
      report.initial_mae = mae(train.targets, predictions);
    else
      report.loss_history.push_back(mae(train.targets, predictions));
    adam_step(w, grad, state, cfg);
  }
  report.loss_history.push_back(mae(train.targets, predict_series(arch, report.final_weights, train)));
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace resn
