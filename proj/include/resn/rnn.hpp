#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "resn/data.hpp"
#include "resn/errors.hpp"

namespace resn {

/// Bounds of the architecture search. Setting min == max freezes a
/// dimension (e.g. a fixed look-back).
struct SearchSpace {
  std::size_t max_layers = 3;
  std::size_t min_neurons = 1;
  std::size_t max_neurons = 32;
  std::size_t min_look_back = 2;
  std::size_t max_look_back = 16;

  void validate() const {
    if (max_layers < 1) throw invalid_argument("SearchSpace: max_layers must be >= 1");
    if (min_neurons < 1 || min_neurons > max_neurons)
      throw invalid_argument("SearchSpace: need 1 <= min_neurons <= max_neurons");
    if (min_look_back < 1 || min_look_back > max_look_back)
      throw invalid_argument("SearchSpace: need 1 <= min_look_back <= max_look_back");
  }

  bool operator==(const SearchSpace&) const = default;
};

/// Genotype: stacked LSTM widths plus the look-back window length.
struct Architecture {
  std::vector<std::size_t> hidden_layers;
  std::size_t look_back = 1;
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;

  void validate() const {
    if (hidden_layers.empty()) throw invalid_argument("Architecture: needs at least one hidden layer");
    for (auto w : hidden_layers)
      if (w == 0) throw invalid_argument("Architecture: layer widths must be positive");
    if (look_back == 0 || input_dim == 0 || output_dim == 0)
      throw invalid_argument("Architecture: look_back and dimensions must be positive");
  }

  bool fits(const SearchSpace& space) const {
    if (hidden_layers.empty() || hidden_layers.size() > space.max_layers) return false;
    for (auto w : hidden_layers)
      if (w < space.min_neurons || w > space.max_neurons) return false;
    return look_back >= space.min_look_back && look_back <= space.max_look_back;
  }

  bool operator==(const Architecture&) const = default;
};

/// Flat parameter vector in canonical order. Per LSTM layer: input-to-gates
/// matrix (4h x in, row-major), recurrent-to-gates matrix (4h x h,
/// row-major), gate biases (4h); gate blocks are ordered input, forget,
/// cell candidate, output. Then the dense readout matrix (out x h_last,
/// row-major) and its bias.
struct WeightVector {
  std::vector<double> values;

  WeightVector() = default;
  explicit WeightVector(std::vector<double> v) : values(std::move(v)) {}
  explicit WeightVector(std::size_t n, double fill = 0.0) : values(n, fill) {}

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool operator==(const WeightVector&) const = default;
};

inline std::size_t weight_count(const Architecture& arch) {
  std::size_t total = 0;
  std::size_t in = arch.input_dim;
  for (auto h : arch.hidden_layers) {
    total += 4 * (h * (in + h) + h);
    in = h;
  }
  return total + in * arch.output_dim + arch.output_dim;
}

namespace detail {

using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeightMap = Eigen::Map<const RowMajorMatrix>;
using WeightMap = Eigen::Map<RowMajorMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
// Kernels copy weights out of these maps before any product or reduction:
// Eigen's vectorized loops peel by address, so results computed directly on
// an arbitrarily offset map can differ in the last bit from call to call.

struct LayerLayout {
  std::size_t inputs;
  std::size_t hidden;
  std::size_t input_weights;      // offset of the 4h x inputs block
  std::size_t recurrent_weights;  // offset of the 4h x hidden block
  std::size_t bias;               // offset of the 4h biases
};

struct Layout {
  std::vector<LayerLayout> layers;
  std::size_t readout_weights = 0;
  std::size_t readout_bias = 0;
  std::size_t total = 0;
};

inline Layout layout_of(const Architecture& arch) {
  Layout lay;
  std::size_t offset = 0;
  std::size_t in = arch.input_dim;
  for (auto h : arch.hidden_layers) {
    LayerLayout l{in, h, offset, offset + 4 * h * in, offset + 4 * h * in + 4 * h * h};
    offset = l.bias + 4 * h;
    lay.layers.push_back(l);
    in = h;
  }
  lay.readout_weights = offset;
  lay.readout_bias = offset + in * arch.output_dim;
  lay.total = lay.readout_bias + arch.output_dim;
  return lay;
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 / (1.0 + (-x).exp());
}

// tanh via a single exp; same absolute accuracy as std::tanh and vectorizes.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x) {
  return 2.0 / (1.0 + (-2.0 * x).exp()) - 1.0;
}

/// Activations of one layer over the whole unrolled batch. Columns are
/// time-major: column t*batch + k holds window k at step t.
struct LayerTape {
  Matrix inputs;  // in x (T*batch)
  Matrix gates;   // 4h x (T*batch), post-activation
  Matrix cell;    // h x (T*batch)
  Matrix cell_tanh;
  Matrix hidden;
};

struct Tape {
  std::vector<LayerTape> layers;
};

/// Stacks a batch of windows into the time-major input matrix for layer 1.
inline Matrix stack_inputs(std::span<const double> windows, std::size_t look_back, std::size_t batch) {
  Matrix x(1, static_cast<Eigen::Index>(look_back * batch));
  for (std::size_t k = 0; k < batch; ++k)
    for (std::size_t t = 0; t < look_back; ++t)
      x(0, static_cast<Eigen::Index>(t * batch + k)) = windows[k * look_back + t];
  return x;
}

/// Runs the stacked LSTM on a batch and returns the readout (out x batch).
/// When `tape` is non-null every intermediate needed by BPTT is kept.
inline Matrix forward_batch(const Architecture& arch, const Layout& lay, std::span<const double> w,
                            Matrix inputs, std::size_t batch, Tape* tape) {
  const auto T = static_cast<Eigen::Index>(arch.look_back);
  const auto B = static_cast<Eigen::Index>(batch);
  if (tape) tape->layers.clear();

  Matrix last_hidden;
  for (const auto& l : lay.layers) {
    const auto H = static_cast<Eigen::Index>(l.hidden);
    const auto I = static_cast<Eigen::Index>(l.inputs);
    const RowMajorMatrix wx = ConstWeightMap(w.data() + l.input_weights, 4 * H, I);
    const RowMajorMatrix wh = ConstWeightMap(w.data() + l.recurrent_weights, 4 * H, H);
    const Eigen::VectorXd bias = ConstVecMap(w.data() + l.bias, 4 * H);

    Matrix pre = wx * inputs;
    pre.colwise() += bias;

    Matrix hidden_seq(H, T * B);
    Matrix cell_seq, tanh_seq, gate_seq;
    if (tape) {
      cell_seq.resize(H, T * B);
      tanh_seq.resize(H, T * B);
      gate_seq.resize(4 * H, T * B);
    }
    Matrix h = Matrix::Zero(H, B);
    Matrix c = Matrix::Zero(H, B);
    Matrix z(4 * H, B);
    for (Eigen::Index t = 0; t < T; ++t) {
      z = pre.middleCols(t * B, B);
      if (t > 0) z.noalias() += wh * h;
      auto zi = z.topRows(H).array();
      auto zf = z.middleRows(H, H).array();
      auto zg = z.middleRows(2 * H, H).array();
      auto zo = z.bottomRows(H).array();
      Eigen::ArrayXXd gi = sigmoid(zi);
      Eigen::ArrayXXd gf = sigmoid(zf);
      Eigen::ArrayXXd gg = fast_tanh(zg);
      Eigen::ArrayXXd go = sigmoid(zo);
      c.array() = gf * c.array() + gi * gg;
      Eigen::ArrayXXd tc = fast_tanh(c.array());
      h.array() = go * tc;
      hidden_seq.middleCols(t * B, B) = h;
      if (tape) {
        cell_seq.middleCols(t * B, B) = c;
        tanh_seq.middleCols(t * B, B) = tc.matrix();
        gate_seq.block(0, t * B, H, B) = gi.matrix();
        gate_seq.block(H, t * B, H, B) = gf.matrix();
        gate_seq.block(2 * H, t * B, H, B) = gg.matrix();
        gate_seq.block(3 * H, t * B, H, B) = go.matrix();
      }
    }
    last_hidden = h;
    if (tape) {
      tape->layers.push_back(LayerTape{std::move(inputs), std::move(gate_seq), std::move(cell_seq),
                                       std::move(tanh_seq), hidden_seq});
    }
    inputs = std::move(hidden_seq);
  }

  const auto H = static_cast<Eigen::Index>(lay.layers.back().hidden);
  const auto O = static_cast<Eigen::Index>(arch.output_dim);
  const RowMajorMatrix wout = ConstWeightMap(w.data() + lay.readout_weights, O, H);
  const Eigen::VectorXd bout = ConstVecMap(w.data() + lay.readout_bias, O);
  Matrix out = wout * last_hidden;
  out.colwise() += bout;
  return out;
}

inline void check_weights(const Architecture& arch, const WeightVector& weights) {
  const auto expected = weight_count(arch);
  if (weights.size() != expected) throw shape_error("weight vector length", expected, weights.size());
}

}  // namespace detail

/// Scalar prediction for one window: LSTM stack over the window (zero
/// initial states) followed by a linear readout of the last hidden state.
inline double forward(const Architecture& arch, const WeightVector& weights, std::span<const double> window) {
  detail::check_weights(arch, weights);
  if (window.size() != arch.look_back) throw shape_error("input window length", arch.look_back, window.size());
  const auto lay = detail::layout_of(arch);
  auto out = detail::forward_batch(arch, lay, weights.values, detail::stack_inputs(window, arch.look_back, 1), 1,
                                   nullptr);
  return out(0, 0);
}

/// Predictions for every pair of a windowed set, evaluated as one batch.
inline std::vector<double> predict_series(const Architecture& arch, const WeightVector& weights,
                                          const WindowedSet& windowed) {
  detail::check_weights(arch, weights);
  if (windowed.look_back != arch.look_back)
    throw shape_error("windowed set look_back", arch.look_back, windowed.look_back);
  const std::size_t n = windowed.size();
  if (n == 0) return {};
  const auto lay = detail::layout_of(arch);
  auto out = detail::forward_batch(arch, lay, weights.values,
                                   detail::stack_inputs(windowed.input_values, arch.look_back, n), n, nullptr);
  return {out.data(), out.data() + n};
}

/// Widths joined by '-', e.g. "16-8". Used in CSV cells.
inline std::string layers_to_string(const Architecture& arch) {
  std::string s;
  for (std::size_t i = 0; i < arch.hidden_layers.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(arch.hidden_layers[i]);
  }
  return s;
}

/// Champion text record. First line: comma-separated widths, a space, the
/// look-back (e.g. "16,8 12"). Then one weight per line in round-trip
/// decimal form.
inline void write_champion(std::ostream& os, const Architecture& arch, const WeightVector& weights) {
  detail::check_weights(arch, weights);
  for (std::size_t i = 0; i < arch.hidden_layers.size(); ++i) os << (i ? "," : "") << arch.hidden_layers[i];
  os << ' ' << arch.look_back << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double v : weights.values) os << v << '\n';
}

struct Champion {
  Architecture arch;
  WeightVector weights;
};

inline Champion read_champion(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw parse_error("champion record: missing architecture line", 1);
  Champion c;
  {
    std::istringstream header(line);
    std::string widths;
    if (!(header >> widths >> c.arch.look_back)) throw parse_error("champion record: malformed architecture line", 1);
    std::istringstream ws(widths);
    std::string item;
    while (std::getline(ws, item, ',')) {
      double w = 0.0;
      if (!detail::parse_double(item, w) || w < 1 || w != static_cast<double>(static_cast<std::size_t>(w)))
        throw parse_error("champion record: bad layer width '" + item + "'", 1);
      c.arch.hidden_layers.push_back(static_cast<std::size_t>(w));
    }
    c.arch.validate();
  }
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    double v = 0.0;
    if (!detail::parse_double(detail::trim(line), v)) throw parse_error("champion record: bad weight", row);
    c.weights.values.push_back(v);
  }
  detail::check_weights(c.arch, c.weights);
  return c;
}

}  // namespace resn
