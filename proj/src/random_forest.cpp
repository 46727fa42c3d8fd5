#include "adaloc/random_forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "adaloc/errors.hpp"
#include "adaloc/rng.hpp"

namespace adaloc {

namespace {

// A node counts as pure when its summed within-node sum of squares is
// indistinguishable from the rounding noise of its own means.
bool node_is_pure(double ss, double n, double mean_sq_scale) {
  return ss <= n * 1e-28 * (mean_sq_scale + 1.0);
}

}  // namespace

void ForestConfig::validate() const {
  if (n_trees < 1) {
    throw ParameterError("ForestConfig: n_trees must be >= 1");
  }
  if (max_depth < 0) {
    throw ParameterError("ForestConfig: max_depth must be >= 0");
  }
  if (min_samples_leaf < 1) {
    throw ParameterError("ForestConfig: min_samples_leaf must be >= 1");
  }
  if (n_features_per_split < 0) {
    throw ParameterError("ForestConfig: n_features_per_split must be >= 0");
  }
}

int ForestConfig::resolved_features_per_split(int n_features) const {
  if (n_features_per_split == 0) {
    return (n_features + 2) / 3;  // ceil(n_features / 3)
  }
  return std::min(n_features_per_split, n_features);
}

struct Forest::TreeFitResult {};

Forest::Tree Forest::fit_tree(const Matrix& x, const Matrix& y,
                              const ForestConfig& cfg, int mtry,
                              std::uint64_t seed, Vector& importance_acc) {
  const int n_samples = static_cast<int>(x.rows());
  const int n_features = static_cast<int>(x.cols());
  const int n_targets = static_cast<int>(y.cols());
  Rng rng(seed);

  // Bootstrap resample: indices into the training rows.
  std::vector<int> idx(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    idx[i] = static_cast<int>(rng.uniform_int(n_samples));
  }

  Tree tree;
  std::vector<int> feature_perm(n_features);

  // Builds the node over idx[begin, end) and returns its index in the tree.
  auto build = [&](auto&& self, int begin, int end, int depth) -> int {
    const int n = end - begin;
    Vector node_mean = Vector::Zero(n_targets);
    for (int i = begin; i < end; ++i) {
      node_mean += y.row(idx[i]).transpose();
    }
    node_mean /= static_cast<double>(n);
    double node_ss = 0.0;
    for (int i = begin; i < end; ++i) {
      node_ss += (y.row(idx[i]).transpose() - node_mean).squaredNorm();
    }

    const auto make_leaf = [&]() {
      const int node = static_cast<int>(tree.feature.size());
      tree.feature.push_back(-1);
      tree.threshold.push_back(0.0);
      tree.left.push_back(-1);
      tree.right.push_back(-1);
      tree.value.emplace_back(node_mean.data(), node_mean.data() + n_targets);
      return node;
    };

    const double mean_sq = node_mean.cwiseAbs2().maxCoeff();
    if (n < 2 * cfg.min_samples_leaf ||
        (cfg.max_depth > 0 && depth >= cfg.max_depth) ||
        node_is_pure(node_ss, n, mean_sq)) {
      return make_leaf();
    }

    // Draw mtry distinct candidate features (partial Fisher-Yates).
    std::iota(feature_perm.begin(), feature_perm.end(), 0);
    for (int i = 0; i < mtry; ++i) {
      const int j =
          i + static_cast<int>(rng.uniform_int(
                  static_cast<std::uint64_t>(n_features - i)));
      std::swap(feature_perm[i], feature_perm[j]);
    }

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<int> order(idx.begin() + begin, idx.begin() + end);
    std::vector<double> centered(static_cast<std::size_t>(n) * n_targets);
    for (int c = 0; c < mtry; ++c) {
      const int f = feature_perm[c];
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = x(a, f);
        const double vb = x(b, f);
        return va < vb || (va == vb && a < b);
      });
      // Targets centered on the node mean keep the running sums well
      // conditioned when leaf variances are far below the mean scale.
      for (int i = 0; i < n; ++i) {
        for (int t = 0; t < n_targets; ++t) {
          centered[static_cast<std::size_t>(i) * n_targets + t] =
              y(order[i], t) - node_mean[t];
        }
      }
      std::vector<double> psum(n_targets, 0.0);
      double psumsq = 0.0;
      double total_sumsq = 0.0;
      std::vector<double> total_sum(n_targets, 0.0);
      for (int i = 0; i < n; ++i) {
        for (int t = 0; t < n_targets; ++t) {
          const double v = centered[static_cast<std::size_t>(i) * n_targets + t];
          total_sum[t] += v;
          total_sumsq += v * v;
        }
      }
      for (int s = 1; s < n; ++s) {
        for (int t = 0; t < n_targets; ++t) {
          const double v =
              centered[static_cast<std::size_t>(s - 1) * n_targets + t];
          psum[t] += v;
        }
        {
          const double* row =
              &centered[static_cast<std::size_t>(s - 1) * n_targets];
          for (int t = 0; t < n_targets; ++t) {
            psumsq += row[t] * row[t];
          }
        }
        if (s < cfg.min_samples_leaf || n - s < cfg.min_samples_leaf) {
          continue;
        }
        const double lo = x(order[s - 1], f);
        const double hi = x(order[s], f);
        if (!(lo < hi)) {
          continue;  // thresholds sit between distinct values only
        }
        double ss_left = psumsq;
        double ss_right = total_sumsq - psumsq;
        for (int t = 0; t < n_targets; ++t) {
          ss_left -= psum[t] * psum[t] / static_cast<double>(s);
          const double rsum = total_sum[t] - psum[t];
          ss_right -= rsum * rsum / static_cast<double>(n - s);
        }
        const double gain = node_ss - std::max(ss_left, 0.0) -
                            std::max(ss_right, 0.0);
        if (gain > best_gain) {
          double threshold = 0.5 * (lo + hi);
          if (!(threshold < hi)) {
            threshold = lo;  // midpoint rounded up; fall back to the left value
          }
          best_gain = gain;
          best_feature = f;
          best_threshold = threshold;
        }
      }
    }

    if (best_feature < 0) {
      return make_leaf();
    }

    importance_acc[best_feature] += best_gain;

    const auto mid = std::stable_partition(
        idx.begin() + begin, idx.begin() + end,
        [&](int i) { return x(i, best_feature) <= best_threshold; });
    const int split = static_cast<int>(mid - idx.begin());

    const int node = static_cast<int>(tree.feature.size());
    tree.feature.push_back(best_feature);
    tree.threshold.push_back(best_threshold);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.value.emplace_back();
    const int left = self(self, begin, split, depth + 1);
    const int right = self(self, split, end, depth + 1);
    tree.left[node] = left;
    tree.right[node] = right;
    return node;
  };

  build(build, 0, n_samples, 0);
  return tree;
}

Forest Forest::fit(const Matrix& x, const Matrix& y, const ForestConfig& cfg) {
  cfg.validate();
  const int n_samples = static_cast<int>(x.rows());
  const int n_features = static_cast<int>(x.cols());
  const int n_targets = static_cast<int>(y.cols());
  if (n_samples < 2) {
    throw InsufficientDataError("Forest::fit: needs at least 2 samples, got " +
                                std::to_string(n_samples));
  }
  if (y.rows() != n_samples) {
    throw DimensionError("Forest::fit: x and y row counts differ");
  }
  if (n_features < 1 || n_targets < 1) {
    throw DimensionError("Forest::fit: x and y must be non-empty");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw ParameterError("Forest::fit: non-finite training data");
  }

  Forest forest;
  forest.config_ = cfg;
  forest.n_features_ = n_features;
  forest.n_targets_ = n_targets;
  const int mtry = cfg.resolved_features_per_split(n_features);

  // Trees are independent given their derived streams, so they are fitted
  // in parallel; per-tree importance buffers are summed in tree order
  // afterwards to keep the result identical under any scheduling.
  forest.trees_.resize(cfg.n_trees);
  std::vector<Vector> importance_per_tree(
      cfg.n_trees, Vector::Zero(n_features));
  const unsigned hw = std::thread::hardware_concurrency();
  const int n_workers = std::max(
      1, std::min<int>(cfg.n_trees, hw == 0 ? 1 : static_cast<int>(hw)));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int t = next.fetch_add(1); t < cfg.n_trees; t = next.fetch_add(1)) {
      const std::uint64_t seed = derive_stream(
          cfg.rng_seed, {stream::kTree, static_cast<std::uint64_t>(t)});
      forest.trees_[t] =
          fit_tree(x, y, cfg, mtry, seed, importance_per_tree[t]);
    }
  };
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      threads.emplace_back(worker);
    }
    for (std::thread& th : threads) {
      th.join();
    }
  }
  Vector importance_acc = Vector::Zero(n_features);
  for (const Vector& contrib : importance_per_tree) {
    importance_acc += contrib;
  }
  const double total = importance_acc.sum();
  forest.importances_ =
      total > 0.0 ? Vector(importance_acc / total) : Vector(importance_acc);
  return forest;
}

Vector Forest::predict(const Vector& features) const {
  if (trees_.empty()) {
    throw InsufficientDataError("Forest::predict: forest is not fitted");
  }
  if (features.size() != n_features_) {
    throw DimensionError("Forest::predict: feature vector has size " +
                         std::to_string(features.size()) + ", expected " +
                         std::to_string(n_features_));
  }
  if (!features.allFinite()) {
    throw ParameterError("Forest::predict: non-finite features");
  }
  Vector acc = Vector::Zero(n_targets_);
  for (const Tree& tree : trees_) {
    int node = 0;
    while (tree.feature[node] >= 0) {
      node = features[tree.feature[node]] <= tree.threshold[node]
                 ? tree.left[node]
                 : tree.right[node];
    }
    for (int t = 0; t < n_targets_; ++t) {
      acc[t] += tree.value[node][t];
    }
  }
  return acc / static_cast<double>(trees_.size());
}

nlohmann::json Forest::to_json() const {
  nlohmann::json j;
  j["format"] = "adaloc-forest-v1";
  j["n_features"] = n_features_;
  j["n_targets"] = n_targets_;
  j["config"] = {{"n_trees", config_.n_trees},
                 {"max_depth", config_.max_depth},
                 {"min_samples_leaf", config_.min_samples_leaf},
                 {"n_features_per_split", config_.n_features_per_split},
                 {"rng_seed", config_.rng_seed}};
  j["importances"] = std::vector<double>(
      importances_.data(), importances_.data() + importances_.size());
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& tree : trees_) {
    trees.push_back({{"feature", tree.feature},
                     {"threshold", tree.threshold},
                     {"left", tree.left},
                     {"right", tree.right},
                     {"value", tree.value}});
  }
  j["trees"] = std::move(trees);
  return j;
}

Forest Forest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "adaloc-forest-v1") {
      throw ConfigError("Forest::from_json: unknown format tag");
    }
    Forest forest;
    forest.n_features_ = j.at("n_features").get<int>();
    forest.n_targets_ = j.at("n_targets").get<int>();
    const auto& jc = j.at("config");
    forest.config_.n_trees = jc.at("n_trees").get<int>();
    forest.config_.max_depth = jc.at("max_depth").get<int>();
    forest.config_.min_samples_leaf = jc.at("min_samples_leaf").get<int>();
    forest.config_.n_features_per_split =
        jc.at("n_features_per_split").get<int>();
    forest.config_.rng_seed = jc.at("rng_seed").get<std::uint64_t>();
    const auto imp = j.at("importances").get<std::vector<double>>();
    if (static_cast<int>(imp.size()) != forest.n_features_) {
      throw ConfigError("Forest::from_json: importance size mismatch");
    }
    forest.importances_ = Eigen::Map<const Vector>(
        imp.data(), static_cast<Eigen::Index>(imp.size()));
    for (const auto& jt : j.at("trees")) {
      Tree tree;
      tree.feature = jt.at("feature").get<std::vector<int>>();
      tree.threshold = jt.at("threshold").get<std::vector<double>>();
      tree.left = jt.at("left").get<std::vector<int>>();
      tree.right = jt.at("right").get<std::vector<int>>();
      tree.value = jt.at("value").get<std::vector<std::vector<double>>>();
      const std::size_t n_nodes = tree.feature.size();
      if (tree.threshold.size() != n_nodes || tree.left.size() != n_nodes ||
          tree.right.size() != n_nodes || tree.value.size() != n_nodes ||
          n_nodes == 0) {
        throw ConfigError("Forest::from_json: inconsistent tree arrays");
      }
      for (std::size_t i = 0; i < n_nodes; ++i) {
        const bool leaf = tree.feature[i] < 0;
        const int lo = static_cast<int>(i) + 1;
        const int hi = static_cast<int>(n_nodes);
        if (leaf) {
          if (static_cast<int>(tree.value[i].size()) != forest.n_targets_) {
            throw ConfigError("Forest::from_json: leaf value size mismatch");
          }
        } else if (tree.feature[i] >= forest.n_features_ ||
                   tree.left[i] < lo || tree.left[i] >= hi ||
                   tree.right[i] < lo || tree.right[i] >= hi) {
          throw ConfigError("Forest::from_json: invalid node links");
        }
      }
      forest.trees_.push_back(std::move(tree));
    }
    if (forest.trees_.empty()) {
      throw ConfigError("Forest::from_json: no trees");
    }
    return forest;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("Forest::from_json: malformed JSON: ") +
                      e.what());
  }
}

}  // namespace adaloc
