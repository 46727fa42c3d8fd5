#pragma once

#include <cstdint>

#include "adaloc/ensemble.hpp"
#include "adaloc/lorenz96.hpp"
#include "adaloc/rng.hpp"
#include "adaloc/types.hpp"

namespace adaloc {

// One batch of observations y = H x + noise, with diagonal error
// covariance R = diag(r_diag).
struct ObservationBatch {
  Vector y;
  Matrix h;       // n_obs x n_state
  Vector r_diag;  // n_obs positive variances

  static ObservationBatch identity(Vector y, Vector r_diag);
  int n_obs() const { return static_cast<int>(y.size()); }
  void validate() const;
};

enum class FilterVariant { stochastic, deterministic };

struct FilterConfig {
  int n_ens = 25;
  double inflation = 1.09;
  FilterVariant variant = FilterVariant::deterministic;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

// Integrates every member n_steps forward with the model's RK4 step.
Ensemble forecast(const Lorenz96Config& cfg, const Ensemble& ens,
                  long n_steps);

// K = B H^T (H B H^T + R)^{-1} for a (localized) covariance B.
Matrix kalman_gain(const Matrix& b, const ObservationBatch& obs);

// Perturbed-observations update: member e is pulled toward y + zeta_e,
// where zeta has columns drawn from N(0, R).
Ensemble analysis_stochastic_with_perturbations(const Ensemble& ens,
                                                const ObservationBatch& obs,
                                                const Matrix& gain,
                                                const Matrix& zeta);

// Draws zeta from rng (member-major, component-minor order) and applies
// the perturbed-observations update.
Ensemble analysis_stochastic(const Ensemble& ens, const ObservationBatch& obs,
                             const Matrix& gain, Rng& rng);

// Deterministic square-root update: the mean gets the full gain, the
// anomalies are contracted with half of it, X'^a = X'^f - (K/2) H X'^f.
Ensemble analysis_deterministic(const Ensemble& ens,
                                const ObservationBatch& obs,
                                const Matrix& gain);

}  // namespace adaloc
