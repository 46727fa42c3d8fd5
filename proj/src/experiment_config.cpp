#include "adaloc/experiment_config.hpp"

#include <algorithm>
#include <cmath>

#include "adaloc/errors.hpp"

namespace adaloc {

void RadiusPool::validate() const {
  if (mode == PoolMode::scalar_in_time) {
    if (scalar_candidates.empty()) {
      throw ConfigError("RadiusPool: scalar candidate list is empty");
    }
    double prev = 0.0;
    for (double r : scalar_candidates) {
      if (!(r > 0.0) || !std::isfinite(r)) {
        throw ConfigError("RadiusPool: candidates must be positive");
      }
      if (!(r > prev)) {
        throw ConfigError("RadiusPool: candidates must be strictly increasing");
      }
      prev = r;
    }
  } else {
    if (n_trials < 1) {
      throw ConfigError("RadiusPool: n_trials must be >= 1");
    }
    if (value_lo < 1 || value_hi < value_lo) {
      throw ConfigError("RadiusPool: need 1 <= value_lo <= value_hi");
    }
  }
}

void ExperimentConfig::validate() const {
  try {
    model.validate();
    filter.validate();
    weights.validate();
    forest.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (steps_per_cycle < 1) {
    throw ConfigError("model.steps_per_cycle: must be >= 1");
  }
  if (spin_up_steps < 0) {
    throw ConfigError("model.spin_up_steps: must be >= 0");
  }
  if (!(fixed_radius > 0.0) || !std::isfinite(fixed_radius)) {
    throw ConfigError("localization.fixed_radius: must be positive");
  }
  if (pool_min < 1 || pool_max < pool_min) {
    throw ConfigError("localization.pool_min/pool_max: need 1 <= min <= max");
  }
  if (n_trials < 1) {
    throw ConfigError("localization.n_trials: must be >= 1");
  }
  if (n_cycles < 2) {
    throw ConfigError("experiment.n_cycles: must be >= 2");
  }
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw ConfigError("experiment.train_fraction: must be in (0, 1)");
  }
  if (!(obs_noise_std > 0.0) || !std::isfinite(obs_noise_std)) {
    throw ConfigError("experiment.obs_noise_std: must be positive");
  }
  if (!(background_frac > 0.0) || !std::isfinite(background_frac)) {
    throw ConfigError("experiment.background_frac: must be positive");
  }
  if (feature_stride < 1 || feature_stride > model.k) {
    throw ConfigError("features.stride: must be in [1, model.k]");
  }
  if (corr_lag < 1 || 2 * corr_lag >= model.k) {
    throw ConfigError("features.corr_lag: must be in [1, model.k/2)");
  }
  const int n_train = n_train_cycles();
  if (n_train < 2) {
    throw ConfigError(
        "experiment.train_fraction: leaves fewer than 2 training cycles");
  }
  if (n_train > n_cycles - 1) {
    throw ConfigError("experiment.train_fraction: leaves no test cycles");
  }
  make_pool().validate();
}

RadiusPool ExperimentConfig::make_pool() const {
  RadiusPool pool;
  pool.mode = mode;
  pool.n_trials = n_trials;
  pool.value_lo = pool_min;
  pool.value_hi = pool_max;
  pool.rng_seed = seed;
  if (mode == PoolMode::scalar_in_time) {
    pool.scalar_candidates.reserve(pool_max - pool_min + 1);
    for (int r = pool_min; r <= pool_max; ++r) {
      pool.scalar_candidates.push_back(static_cast<double>(r));
    }
  }
  return pool;
}

int ExperimentConfig::n_train_cycles() const {
  const long n = std::lround(train_fraction * static_cast<double>(n_cycles));
  return static_cast<int>(std::clamp(n, 1L, static_cast<long>(n_cycles - 1)));
}

}  // namespace adaloc
