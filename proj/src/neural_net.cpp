#include <algorithm>
#include <cmath>

#include "churnforge/error.hpp"
#include "churnforge/learners.hpp"
#include "churnforge/rng.hpp"

namespace churnforge {

namespace {
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

NeuralNet::NeuralNet(std::size_t n_inputs, std::size_t n_hidden)
    : inputs(n_inputs),
      hidden(n_hidden),
      hidden_weights(n_inputs * n_hidden, 0.0),
      hidden_bias(n_hidden, 0.0),
      output_weights(n_hidden, 0.0),
      input_scaling(n_inputs) {}

double NeuralNet::forward(std::span<const double> in) const {
  double z_out = output_bias;
  for (std::size_t j = 0; j < hidden; ++j) {
    double z = hidden_bias[j];
    const double* w = hidden_weights.data() + j * inputs;
    for (std::size_t i = 0; i < inputs; ++i) z += w[i] * in[i];
    z_out += output_weights[j] * sigmoid(z);
  }
  return sigmoid(z_out);
}

double NeuralNet::predict_raw(std::span<const double> x) const {
  std::vector<double> scaled(inputs);
  for (std::size_t i = 0; i < inputs; ++i) scaled[i] = input_scaling[i].scale(x[i]);
  return target_scaling.unscale(forward(scaled));
}

std::vector<double> NeuralNet::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  p.insert(p.end(), hidden_weights.begin(), hidden_weights.end());
  p.insert(p.end(), hidden_bias.begin(), hidden_bias.end());
  p.insert(p.end(), output_weights.begin(), output_weights.end());
  p.push_back(output_bias);
  return p;
}

void NeuralNet::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw Error(Errc::LengthMismatch, "parameter vector has the wrong size");
  auto it = p.begin();
  std::copy_n(it, hidden_weights.size(), hidden_weights.begin());
  it += static_cast<std::ptrdiff_t>(hidden_weights.size());
  std::copy_n(it, hidden, hidden_bias.begin());
  it += static_cast<std::ptrdiff_t>(hidden);
  std::copy_n(it, hidden, output_weights.begin());
  it += static_cast<std::ptrdiff_t>(hidden);
  output_bias = *it;
}

namespace {

// Accumulates dL/dparam for one row into `grad` (parameters() layout) and
// returns the row's output. L = 0.5 * (o - y)^2.
double backprop(const NeuralNet& net, std::span<const double> in, double target, std::vector<double>& h,
                std::vector<double>& grad) {
  double z_out = net.output_bias;
  for (std::size_t j = 0; j < net.hidden; ++j) {
    double z = net.hidden_bias[j];
    const double* w = net.hidden_weights.data() + j * net.inputs;
    for (std::size_t i = 0; i < net.inputs; ++i) z += w[i] * in[i];
    h[j] = sigmoid(z);
    z_out += net.output_weights[j] * h[j];
  }
  const double o = sigmoid(z_out);
  const double delta_out = (o - target) * o * (1.0 - o);

  const std::size_t hb = net.hidden * net.inputs;
  const std::size_t ow = hb + net.hidden;
  const std::size_t ob = ow + net.hidden;
  for (std::size_t j = 0; j < net.hidden; ++j) {
    const double delta_h = delta_out * net.output_weights[j] * h[j] * (1.0 - h[j]);
    double* g = grad.data() + j * net.inputs;
    for (std::size_t i = 0; i < net.inputs; ++i) g[i] += delta_h * in[i];
    grad[hb + j] += delta_h;
    grad[ow + j] += delta_out * h[j];
  }
  grad[ob] += delta_out;
  return o;
}

void apply_step(NeuralNet& net, const std::vector<double>& step) {
  std::size_t k = 0;
  for (auto& w : net.hidden_weights) w += step[k++];
  for (auto& b : net.hidden_bias) b += step[k++];
  for (auto& w : net.output_weights) w += step[k++];
  net.output_bias += step[k];
}

double mean_squared_error(const NeuralNet& net, const Matrix& x, std::span<const double> y,
                          std::span<const std::size_t> rows) {
  double s = 0.0;
  for (std::size_t r : rows) {
    const double e = net.forward(x.row(r)) - y[r];
    s += e * e;
  }
  return s / static_cast<double>(rows.size());
}

}  // namespace

double nn_loss(const NeuralNet& net, const Matrix& x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double e = net.forward(x.row(r)) - y[r];
    s += 0.5 * e * e;
  }
  return s;
}

std::vector<double> nn_gradient(const NeuralNet& net, const Matrix& x, std::span<const double> y) {
  std::vector<double> grad(net.parameter_count(), 0.0);
  std::vector<double> h(net.hidden);
  for (std::size_t r = 0; r < x.rows; ++r) backprop(net, x.row(r), y[r], h, grad);
  return grad;
}

NeuralNet train_nn(const Matrix& x, std::span<const double> y, const NnConfig& config) {
  if (x.rows != y.size()) throw Error(Errc::LengthMismatch, "feature rows and targets differ in length");
  if (x.rows < 10) throw Error(Errc::TooFewRows, "neural network needs at least 10 rows, got " + std::to_string(x.rows));
  if (x.cols == 0) throw Error(Errc::SchemaMismatch, "no input features");

  const std::size_t hidden = config.hidden ? config.hidden : std::max<std::size_t>(2, (x.cols + 1) / 2);
  NeuralNet net(x.cols, hidden);
  net.target_scaling = fit_target_scaling(y);
  net.input_scaling = fit_feature_scaling(x);

  Matrix sx(x.rows, x.cols);
  std::vector<double> sy(y.size());
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) sx(r, c) = net.input_scaling[c].scale(x(r, c));
    sy[r] = net.target_scaling.scale(y[r]);
  }

  Rng rng(config.seed);
  std::vector<double> params(net.parameter_count());
  for (auto& p : params) p = rng.uniform(-0.5, 0.5);
  net.set_parameters(params);

  std::vector<std::size_t> order(x.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(x.rows) * config.validation_fraction)));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad(params.size());
  std::vector<double> h(hidden);
  std::vector<double> best = params;
  double best_val = mean_squared_error(net, sx, sy, val);
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(train));
    for (std::size_t r : train) {
      std::fill(grad.begin(), grad.end(), 0.0);
      backprop(net, sx.row(r), sy[r], h, grad);
      for (std::size_t k = 0; k < velocity.size(); ++k) {
        velocity[k] = config.momentum * velocity[k] - config.learning_rate * grad[k];
      }
      apply_step(net, velocity);
    }
    const double val_mse = mean_squared_error(net, sx, sy, val);
    if (!std::isfinite(val_mse)) {
      throw Error(Errc::NonFiniteLoss, "validation loss diverged at epoch " + std::to_string(epoch) +
                                           "; try a lower learning rate");
    }
    if (val_mse < best_val) {
      best_val = val_mse;
      best = net.parameters();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  net.set_parameters(best);
  return net;
}

}  // namespace churnforge
