#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "churnforge/csv.hpp"
#include "churnforge/error.hpp"
#include "churnforge/learners.hpp"
#include "churnforge/log.hpp"
#include "churnforge/sha256.hpp"

namespace churnforge {

double LinearModel::evaluate(std::span<const double> x) const {
  double v = intercept;
  for (std::size_t j = 0; j < coefficients.size(); ++j) v += coefficients[j] * x[j];
  return v;
}

std::size_t ModelTree::route(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::size_t ModelTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t ModelTree::depth() const {
  std::function<std::size_t(std::size_t)> walk = [&](std::size_t i) -> std::size_t {
    if (nodes[i].is_leaf()) return 0;
    return 1 + std::max(walk(static_cast<std::size_t>(nodes[i].left)), walk(static_cast<std::size_t>(nodes[i].right)));
  };
  return nodes.empty() ? 0 : walk(0);
}

namespace {

struct LinearFit {
  LinearModel model;
  std::size_t parameters = 1;
  double mae = 0.0;
};

// Ridge regression on standardised columns; constant columns get a zero
// coefficient. Coefficients are mapped back to raw units.
LinearFit fit_linear(const Matrix& x, std::span<const double> y, const std::vector<std::size_t>& idx, double ridge) {
  const std::size_t n = idx.size();
  const std::size_t p = x.cols;
  LinearFit fit;
  fit.model.coefficients.assign(p, 0.0);

  double y_mean = 0.0;
  for (std::size_t i : idx) y_mean += y[i];
  y_mean /= static_cast<double>(n);

  std::vector<double> mean(p, 0.0), sd(p, 0.0);
  for (std::size_t i : idx) {
    for (std::size_t j = 0; j < p; ++j) mean[j] += x(i, j);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i : idx) {
    for (std::size_t j = 0; j < p; ++j) {
      const double d = x(i, j) - mean[j];
      sd[j] += d * d;
    }
  }
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < p; ++j) {
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    if (sd[j] > 1e-12 * std::max(1.0, std::abs(mean[j]))) active.push_back(j);
  }

  if (!active.empty()) {
    const auto a = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), a);
    Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < a; ++c) {
        const std::size_t j = active[static_cast<std::size_t>(c)];
        z(static_cast<Eigen::Index>(r), c) = (x(idx[r], j) - mean[j]) / sd[j];
      }
      yc(static_cast<Eigen::Index>(r)) = y[idx[r]] - y_mean;
    }
    Eigen::MatrixXd gram = z.transpose() * z / static_cast<double>(n);
    gram.diagonal().array() += ridge;
    const Eigen::VectorXd rhs = z.transpose() * yc / static_cast<double>(n);
    const Eigen::VectorXd beta = gram.ldlt().solve(rhs);
    for (Eigen::Index c = 0; c < a; ++c) {
      const std::size_t j = active[static_cast<std::size_t>(c)];
      const double coef = beta(c) / sd[j];
      if (std::isfinite(coef)) fit.model.coefficients[j] = coef;
    }
  }
  fit.model.intercept = y_mean;
  for (std::size_t j = 0; j < p; ++j) fit.model.intercept -= fit.model.coefficients[j] * mean[j];
  fit.parameters = active.size() + 1;

  double abs_err = 0.0;
  for (std::size_t i : idx) abs_err += std::abs(y[i] - fit.model.evaluate(x.row(i)));
  fit.mae = abs_err / static_cast<double>(n);
  return fit;
}

// Pessimistic error estimate for a node's linear model.
double adjusted_error(const LinearFit& fit, std::size_t n) {
  const auto nd = static_cast<double>(n);
  const auto v = static_cast<double>(fit.parameters);
  return nd > v ? fit.mae * (nd + v) / (nd - v) : fit.mae * 10.0;
}

double std_dev(std::span<const double> y, const std::vector<std::size_t>& idx) {
  double mean = 0.0;
  for (std::size_t i : idx) mean += y[i];
  mean /= static_cast<double>(idx.size());
  double ss = 0.0;
  for (std::size_t i : idx) ss += (y[i] - mean) * (y[i] - mean);
  return std::sqrt(ss / static_cast<double>(idx.size()));
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::span<const double> y, const TreeConfig& config, std::vector<TreeNode>& nodes)
      : x_(x), y_(y), config_(config), nodes_(nodes) {}

  double root_sd = 0.0;
  std::vector<double> node_error;  // adjusted error of each node's own model

  int grow(std::vector<std::size_t> idx, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    node_error.push_back(0.0);
    const LinearFit fit = fit_linear(x_, y_, idx, config_.ridge);
    nodes_[static_cast<std::size_t>(id)].model = fit.model;
    nodes_[static_cast<std::size_t>(id)].rows = idx.size();
    node_error[static_cast<std::size_t>(id)] = adjusted_error(fit, idx.size());

    if (idx.size() < 2 * config_.min_leaf || depth >= config_.max_depth) return id;
    const double sd = std_dev(y_, idx);
    if (!(sd > 0.0)) return id;
    const Split best = find_split(idx, sd);
    if (best.feature < 0 || best.score < config_.min_variance_reduction * root_sd) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (x_(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

 private:
  const Matrix& x_;
  std::span<const double> y_;
  const TreeConfig& config_;
  std::vector<TreeNode>& nodes_;

  Split find_split(const std::vector<std::size_t>& idx, double sd) const {
    const std::size_t n = idx.size();
    double mean = 0.0;
    for (std::size_t i : idx) mean += y_[i];
    mean /= static_cast<double>(n);

    Split best;
    std::vector<std::pair<double, std::size_t>> order(n);
    std::vector<double> cum(n + 1), cum2(n + 1);
    for (std::size_t f = 0; f < x_.cols; ++f) {
      for (std::size_t k = 0; k < n; ++k) order[k] = {x_(idx[k], f), idx[k]};
      std::sort(order.begin(), order.end());
      if (!(order.front().first < order.back().first)) continue;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = y_[order[k].second] - mean;
        cum[k + 1] = cum[k] + d;
        cum2[k + 1] = cum2[k] + d * d;
      }
      for (std::size_t k = config_.min_leaf; k + config_.min_leaf <= n; ++k) {
        if (!(order[k - 1].first < order[k].first)) continue;
        const auto nl = static_cast<double>(k);
        const auto nr = static_cast<double>(n - k);
        const double sl = cum[k], sl2 = cum2[k];
        const double sr = cum[n] - sl, sr2 = cum2[n] - sl2;
        const double sd_l = std::sqrt(std::max(0.0, sl2 / nl - (sl / nl) * (sl / nl)));
        const double sd_r = std::sqrt(std::max(0.0, sr2 / nr - (sr / nr) * (sr / nr)));
        const double score = sd - (nl * sd_l + nr * sd_r) / static_cast<double>(n);
        if (best.feature < 0 || score > best.score) {
          double threshold = order[k - 1].first + (order[k].first - order[k - 1].first) / 2.0;
          if (!(threshold < order[k].first)) threshold = order[k - 1].first;
          best = {static_cast<int>(f), threshold, score};
        }
      }
    }
    return best;
  }
};

// Collapses a subtree into its node's own model when that model's estimated
// error is no worse than the subtree's. Returns the estimated error of the
// (possibly pruned) subtree.
double prune(std::vector<TreeNode>& nodes, const std::vector<double>& node_error, std::size_t i, double tolerance) {
  auto& node = nodes[i];
  if (node.is_leaf()) return node_error[i];
  const auto l = static_cast<std::size_t>(node.left);
  const auto r = static_cast<std::size_t>(node.right);
  const double el = prune(nodes, node_error, l, tolerance);
  const double er = prune(nodes, node_error, r, tolerance);
  const double subtree = (static_cast<double>(nodes[l].rows) * el + static_cast<double>(nodes[r].rows) * er) /
                         static_cast<double>(node.rows);
  if (node_error[i] <= subtree + tolerance) {
    node.feature = -1;
    node.threshold = 0.0;
    node.left = node.right = -1;
    return node_error[i];
  }
  return subtree;
}

std::vector<TreeNode> compact(const std::vector<TreeNode>& nodes) {
  std::vector<TreeNode> out;
  std::function<int(std::size_t)> copy = [&](std::size_t i) -> int {
    const int id = static_cast<int>(out.size());
    out.push_back(nodes[i]);
    if (!nodes[i].is_leaf()) {
      out[static_cast<std::size_t>(id)].model = {};
      const int l = copy(static_cast<std::size_t>(nodes[i].left));
      const int r = copy(static_cast<std::size_t>(nodes[i].right));
      out[static_cast<std::size_t>(id)].left = l;
      out[static_cast<std::size_t>(id)].right = r;
    }
    return id;
  };
  copy(0);
  return out;
}

std::string fingerprint(const Matrix& x, std::span<const double> y) {
  std::string text;
  text.reserve((x.data.size() + y.size()) * 8);
  text += std::to_string(x.rows) + "x" + std::to_string(x.cols) + ";";
  for (double v : x.data) text += csv::format_number(v) + ",";
  text += ";";
  for (double v : y) text += csv::format_number(v) + ",";
  return sha256_hex(text);
}

}  // namespace

ModelTree train_tree(const Matrix& x, std::span<const double> y, const TreeConfig& config) {
  if (x.rows != y.size()) throw Error(Errc::LengthMismatch, "feature rows and targets differ in length");
  if (config.min_leaf == 0 || x.rows < 2 * config.min_leaf) {
    throw Error(Errc::TooFewRows, "model tree needs at least " + std::to_string(2 * config.min_leaf) + " rows, got " +
                                      std::to_string(x.rows));
  }
  for (double v : x.data) {
    if (!std::isfinite(v)) throw Error(Errc::SchemaMismatch, "non-finite feature value");
  }

  ModelTree tree;
  tree.training_fingerprint = fingerprint(x, y);
  std::vector<std::size_t> all(x.rows);
  std::iota(all.begin(), all.end(), std::size_t{0});

  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (!(*hi > *lo)) {
    log::warn("train", "constant target; returning a single-leaf model");
    TreeNode leaf;
    leaf.model.intercept = *lo;
    leaf.model.coefficients.assign(x.cols, 0.0);
    leaf.rows = x.rows;
    tree.nodes.push_back(std::move(leaf));
    return tree;
  }

  TreeGrower grower(x, y, config, tree.nodes);
  grower.root_sd = std_dev(y, all);
  grower.grow(all, 0);
  prune(tree.nodes, grower.node_error, 0, 1e-5 * grower.root_sd);
  tree.nodes = compact(tree.nodes);
  return tree;
}

}  // namespace churnforge
