#pragma once

#include <cstdint>
#include <string>

#include "adaloc/enkf.hpp"
#include "adaloc/localization.hpp"
#include "adaloc/lorenz96.hpp"
#include "adaloc/metrics.hpp"
#include "adaloc/random_forest.hpp"

namespace adaloc {

enum class PoolMode { scalar_in_time, vector_in_time_space };

// Candidate radii offered to the winner search each cycle.  Scalar mode
// tries every entry of scalar_candidates; vector mode draws n_trials
// per-variable radius vectors with integer components uniform on
// [value_lo, value_hi].
struct RadiusPool {
  PoolMode mode = PoolMode::scalar_in_time;
  std::vector<double> scalar_candidates;
  int n_trials = 30;
  int value_lo = 1;
  int value_hi = 40;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

// Everything a twin experiment needs: truth and observations are generated
// from `model` and `seed`, the filter assimilates every steps_per_cycle
// model steps, and the adaptive machinery learns radii from the first
// train_fraction of the cycles.
struct ExperimentConfig {
  Lorenz96Config model;
  long steps_per_cycle = 20;
  long spin_up_steps = 1000;

  FilterConfig filter;

  Taper taper = Taper::gaspari_cohn;
  PoolMode mode = PoolMode::scalar_in_time;
  double fixed_radius = 4.0;
  int pool_min = 1;
  int pool_max = 40;
  int n_trials = 30;

  CriterionWeights weights;

  int n_cycles = 100;
  double train_fraction = 0.8;
  double obs_noise_std = 1.0;
  double background_frac = 0.08;  // initial spread relative to mean |x_ref|

  int feature_stride = 2;
  int corr_lag = 3;

  ForestConfig forest;

  std::string out_dir = "out";
  std::uint64_t seed = 1;

  void validate() const;
  RadiusPool make_pool() const;
  int n_train_cycles() const;
};

}  // namespace adaloc
