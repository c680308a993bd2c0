#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "churnforge/dataset.hpp"

namespace churnforge {

struct TreeConfig {
  std::size_t min_leaf = 20;
  std::size_t max_depth = 12;
  /// A split must reduce the target standard deviation by at least this
  /// fraction of the root's standard deviation.
  double min_variance_reduction = 1e-4;
  /// Ridge penalty on standardised features in the leaf regressions.
  double ridge = 1e-6;
};

struct NnConfig {
  std::size_t hidden = 0;  // 0 selects max(2, ceil(inputs / 2))
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t max_epochs = 2000;
  std::size_t patience = 20;
  double validation_fraction = 0.10;
  std::uint64_t seed = 0;
};

/// Linear model: intercept + coefficients . x, in raw feature units.
struct LinearModel {
  double intercept = 0.0;
  std::vector<double> coefficients;

  double evaluate(std::span<const double> x) const;
  bool operator==(const LinearModel&) const = default;
};

/// Binary model tree. Rows with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  LinearModel model;  // leaf regression; empty on internal nodes
  std::size_t rows = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class ModelTree {
 public:
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::string training_fingerprint;

  /// Index of the leaf a vector routes to.
  std::size_t route(std::span<const double> x) const;
  double predict_raw(std::span<const double> x) const { return nodes[route(x)].model.evaluate(x); }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  bool operator==(const ModelTree&) const = default;
};

/// input -> sigmoid hidden layer -> sigmoid output. Inputs and target are
/// min-max scaled with the stored parameters.
class NeuralNet {
 public:
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::vector<double> hidden_weights;  // hidden x inputs, row-major
  std::vector<double> hidden_bias;
  std::vector<double> output_weights;  // hidden
  double output_bias = 0.0;
  std::vector<MinMaxParams> input_scaling;
  MinMaxParams target_scaling;

  NeuralNet() = default;
  NeuralNet(std::size_t n_inputs, std::size_t n_hidden);

  /// Output in [0, 1] for an already scaled input.
  double forward(std::span<const double> scaled_input) const;
  double predict_raw(std::span<const double> x) const;

  std::size_t parameter_count() const { return hidden * inputs + hidden + hidden + 1; }
  /// Order: hidden weights, hidden biases, output weights, output bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);

  bool operator==(const NeuralNet&) const = default;
};

/// Summed squared-error loss 0.5 * sum (o - y)^2 over scaled rows.
double nn_loss(const NeuralNet& net, const Matrix& scaled_x, std::span<const double> scaled_y);
/// Back-propagated gradient of `nn_loss` in `parameters()` order.
std::vector<double> nn_gradient(const NeuralNet& net, const Matrix& scaled_x, std::span<const double> scaled_y);

enum class Algorithm { DecisionTree, NeuralNetwork };
std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);

struct TrainedModel {
  Algorithm algorithm = Algorithm::DecisionTree;
  Target target = Target::Added;
  std::vector<std::string> feature_names;
  std::variant<ModelTree, NeuralNet> model;

  bool operator==(const TrainedModel&) const = default;
};

/// Greedy top-down induction on standard-deviation reduction with a ridge
/// linear regression on every node, followed by bottom-up error-based
/// pruning. Throws Error(TooFewRows) below 2 * min_leaf rows; a constant
/// target yields a single-leaf constant model and a warning.
ModelTree train_tree(const Matrix& x, std::span<const double> y, const TreeConfig& config = {});

/// Online back-propagation with momentum and early stopping on a held-out
/// validation slice of the training rows. `x` and `y` are in raw units;
/// scaling is fitted here and stored in the model. Throws
/// Error(DegenerateTarget) for a constant target and Error(NonFiniteLoss)
/// on divergence.
NeuralNet train_nn(const Matrix& x, std::span<const double> y, const NnConfig& config);

/// Prediction in original units, clamped at 0. Throws Error(SchemaMismatch)
/// if the vector width differs from the model's feature list.
double predict(const TrainedModel& model, std::span<const double> x);

/// JSON envelope {format_version, algorithm, target, feature_names,
/// normalisation, payload}.
std::string serialise(const TrainedModel& model);
/// Throws Error(VersionMismatch) or Error(CorruptModel).
TrainedModel deserialise(std::string_view text);

inline constexpr int kModelFormatVersion = 1;

}  // namespace churnforge
