#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "adaloc/types.hpp"

namespace adaloc {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 0;             // 0 = grow until the leaf rules stop it
  int min_samples_leaf = 2;
  int n_features_per_split = 0;  // 0 = ceil(n_features / 3)
  std::uint64_t rng_seed = 1;

  void validate() const;
  int resolved_features_per_split(int n_features) const;
};

// Bagged regression trees.  Each tree fits a bootstrap resample; nodes
// split on the best variance reduction among a random feature subset,
// with thresholds at midpoints between consecutive distinct sorted
// values.  Trees are multi-target: split quality sums the per-target
// sums of squares, and leaves store target-mean vectors.
class Forest {
 public:
  Forest() = default;

  // x is n_samples x n_features, y is n_samples x n_targets.
  static Forest fit(const Matrix& x, const Matrix& y, const ForestConfig& cfg);

  // Mean of the tree outputs for one feature row.
  Vector predict(const Vector& features) const;

  // Mean-decrease-impurity scores, normalized to sum 1 (all zero when no
  // split ever improved impurity).
  const Vector& importances() const { return importances_; }

  int n_features() const { return n_features_; }
  int n_targets() const { return n_targets_; }
  int n_trees() const { return static_cast<int>(trees_.size()); }
  const ForestConfig& config() const { return config_; }

  nlohmann::json to_json() const;
  static Forest from_json(const nlohmann::json& j);

 private:
  // Columnar node storage; child index -1 marks a leaf, whose row of
  // `value` holds the target means.
  struct Tree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<std::vector<double>> value;
  };

  struct TreeFitResult;
  static Tree fit_tree(const Matrix& x, const Matrix& y,
                       const ForestConfig& cfg, int mtry, std::uint64_t seed,
                       Vector& importance_acc);

  std::vector<Tree> trees_;
  Vector importances_;
  ForestConfig config_;
  int n_features_ = 0;
  int n_targets_ = 0;
};

}  // namespace adaloc
