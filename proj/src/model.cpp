#include <cmath>

#include <json.hpp>

#include "churnforge/error.hpp"
#include "churnforge/learners.hpp"

namespace churnforge {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Algorithm a) { return a == Algorithm::DecisionTree ? "dt" : "nn"; }

Algorithm algorithm_from_string(std::string_view s) {
  if (s == "dt") return Algorithm::DecisionTree;
  if (s == "nn") return Algorithm::NeuralNetwork;
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

double predict(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != model.feature_names.size()) {
    throw Error(Errc::SchemaMismatch, "model expects " + std::to_string(model.feature_names.size()) +
                                          " features, got " + std::to_string(x.size()));
  }
  const double raw = std::visit([&](const auto& m) { return m.predict_raw(x); }, model.model);
  if (!std::isfinite(raw)) return 0.0;
  return raw < 0.0 ? 0.0 : raw;
}

namespace {

ojson scaling_json(const MinMaxParams& p) { return ojson{{"min", p.min}, {"max", p.max}}; }

MinMaxParams scaling_from(const nlohmann::json& j) { return {j.at("min").get<double>(), j.at("max").get<double>()}; }

ojson tree_payload(const ModelTree& tree) {
  ojson nodes = ojson::array();
  for (const auto& n : tree.nodes) {
    ojson node;
    if (n.is_leaf()) {
      node["intercept"] = n.model.intercept;
      node["coefficients"] = n.model.coefficients;
    } else {
      node["feature"] = n.feature;
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    node["rows"] = n.rows;
    nodes.push_back(std::move(node));
  }
  return ojson{{"training_fingerprint", tree.training_fingerprint}, {"nodes", std::move(nodes)}};
}

ModelTree tree_from(const nlohmann::json& payload, std::size_t width) {
  ModelTree tree;
  tree.training_fingerprint = payload.at("training_fingerprint").get<std::string>();
  const auto& nodes = payload.at("nodes");
  const auto count = static_cast<int>(nodes.size());
  for (const auto& j : nodes) {
    TreeNode n;
    n.rows = j.at("rows").get<std::size_t>();
    if (j.contains("feature")) {
      n.feature = j.at("feature").get<int>();
      n.threshold = j.at("threshold").get<double>();
      n.left = j.at("left").get<int>();
      n.right = j.at("right").get<int>();
      if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= width || n.left <= 0 || n.right <= 0 ||
          n.left >= count || n.right >= count || !std::isfinite(n.threshold)) {
        throw Error(Errc::CorruptModel, "invalid tree node");
      }
    } else {
      n.model.intercept = j.at("intercept").get<double>();
      n.model.coefficients = j.at("coefficients").get<std::vector<double>>();
      if (n.model.coefficients.size() != width) throw Error(Errc::CorruptModel, "leaf width mismatch");
    }
    tree.nodes.push_back(std::move(n));
  }
  if (tree.nodes.empty()) throw Error(Errc::CorruptModel, "tree has no nodes");
  // Children always follow their parent in preorder, which rules out cycles.
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (!n.is_leaf() && (static_cast<std::size_t>(n.left) <= i || static_cast<std::size_t>(n.right) <= i)) {
      throw Error(Errc::CorruptModel, "tree nodes are not in preorder");
    }
  }
  return tree;
}

ojson nn_payload(const NeuralNet& net) {
  return ojson{{"inputs", net.inputs},
               {"hidden", net.hidden},
               {"activation", "logistic"},
               {"hidden_weights", net.hidden_weights},
               {"hidden_bias", net.hidden_bias},
               {"output_weights", net.output_weights},
               {"output_bias", net.output_bias}};
}

NeuralNet nn_from(const nlohmann::json& payload, const nlohmann::json& norm, std::size_t width) {
  NeuralNet net(payload.at("inputs").get<std::size_t>(), payload.at("hidden").get<std::size_t>());
  if (net.inputs != width || net.hidden == 0) throw Error(Errc::CorruptModel, "network shape mismatch");
  net.hidden_weights = payload.at("hidden_weights").get<std::vector<double>>();
  net.hidden_bias = payload.at("hidden_bias").get<std::vector<double>>();
  net.output_weights = payload.at("output_weights").get<std::vector<double>>();
  net.output_bias = payload.at("output_bias").get<double>();
  if (net.hidden_weights.size() != net.inputs * net.hidden || net.hidden_bias.size() != net.hidden ||
      net.output_weights.size() != net.hidden) {
    throw Error(Errc::CorruptModel, "weight array sizes do not match the network shape");
  }
  net.input_scaling.clear();
  for (const auto& p : norm.at("inputs")) net.input_scaling.push_back(scaling_from(p));
  if (net.input_scaling.size() != width) throw Error(Errc::CorruptModel, "input scaling width mismatch");
  net.target_scaling = scaling_from(norm.at("target"));
  return net;
}

}  // namespace

std::string serialise(const TrainedModel& model) {
  ojson env;
  env["format_version"] = kModelFormatVersion;
  env["algorithm"] = to_string(model.algorithm);
  env["target"] = to_string(model.target);
  env["feature_names"] = model.feature_names;
  if (const auto* net = std::get_if<NeuralNet>(&model.model)) {
    ojson inputs = ojson::array();
    for (const auto& p : net->input_scaling) inputs.push_back(scaling_json(p));
    env["normalisation"] = ojson{{"scheme", "minmax"}, {"inputs", std::move(inputs)}, {"target", scaling_json(net->target_scaling)}};
    env["payload"] = nn_payload(*net);
  } else {
    env["normalisation"] = nullptr;
    env["payload"] = tree_payload(std::get<ModelTree>(model.model));
  }
  return env.dump(2) + "\n";
}

TrainedModel deserialise(std::string_view text) {
  nlohmann::json env;
  try {
    env = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptModel, e.what());
  }
  try {
    if (!env.is_object()) throw Error(Errc::CorruptModel, "model file is not a JSON object");
    const int version = env.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(Errc::VersionMismatch, "model format_version " + std::to_string(version) + ", expected " +
                                             std::to_string(kModelFormatVersion));
    }
    TrainedModel m;
    m.algorithm = algorithm_from_string(env.at("algorithm").get<std::string>());
    m.target = target_from_string(env.at("target").get<std::string>());
    m.feature_names = env.at("feature_names").get<std::vector<std::string>>();
    if (m.algorithm == Algorithm::DecisionTree) {
      m.model = tree_from(env.at("payload"), m.feature_names.size());
    } else {
      m.model = nn_from(env.at("payload"), env.at("normalisation"), m.feature_names.size());
    }
    return m;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::CorruptModel, e.what());
  }
}

}  // namespace churnforge
