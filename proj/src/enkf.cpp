#include "adaloc/enkf.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "adaloc/errors.hpp"

namespace adaloc {

ObservationBatch ObservationBatch::identity(Vector y, Vector r_diag) {
  ObservationBatch obs;
  obs.h = Matrix::Identity(y.size(), y.size());
  obs.y = std::move(y);
  obs.r_diag = std::move(r_diag);
  obs.validate();
  return obs;
}

void ObservationBatch::validate() const {
  if (y.size() < 1) {
    throw DimensionError("ObservationBatch: needs at least one observation");
  }
  if (h.rows() != y.size()) {
    throw DimensionError("ObservationBatch: h has " +
                         std::to_string(h.rows()) + " rows, expected " +
                         std::to_string(y.size()));
  }
  if (r_diag.size() != y.size()) {
    throw DimensionError("ObservationBatch: r_diag size mismatch");
  }
  for (Eigen::Index i = 0; i < r_diag.size(); ++i) {
    if (!(r_diag[i] > 0.0) || !std::isfinite(r_diag[i])) {
      throw ParameterError("ObservationBatch: r_diag must be positive");
    }
  }
  if (!y.allFinite() || !h.allFinite()) {
    throw ParameterError("ObservationBatch: non-finite entries");
  }
}

void FilterConfig::validate() const {
  if (n_ens < 2) {
    throw ParameterError("FilterConfig: n_ens must be >= 2, got " +
                         std::to_string(n_ens));
  }
  if (!(inflation >= 1.0) || !std::isfinite(inflation)) {
    throw ParameterError("FilterConfig: inflation must be >= 1");
  }
}

Ensemble forecast(const Lorenz96Config& cfg, const Ensemble& ens,
                  long n_steps) {
  cfg.validate();
  if (ens.n_state() != cfg.k) {
    throw DimensionError("forecast: ensemble state size " +
                         std::to_string(ens.n_state()) + " != model k " +
                         std::to_string(cfg.k));
  }
  if (n_steps < 0) {
    throw ParameterError("forecast: n_steps must be >= 0");
  }
  Ensemble out = ens;
  for (int e = 0; e < out.n_ens(); ++e) {
    Vector x = out.members.col(e);
    try {
      for (long s = 0; s < n_steps; ++s) {
        x = step_rk4(cfg, x);
      }
    } catch (const IntegrationError&) {
      throw DivergenceError(
          "forecast: member " + std::to_string(e) + " went non-finite", e);
    }
    if (!x.allFinite()) {
      throw DivergenceError(
          "forecast: member " + std::to_string(e) + " went non-finite", e);
    }
    out.members.col(e) = x;
  }
  return out;
}

Matrix kalman_gain(const Matrix& b, const ObservationBatch& obs) {
  obs.validate();
  if (b.rows() != b.cols()) {
    throw DimensionError("kalman_gain: covariance must be square");
  }
  if (obs.h.cols() != b.rows()) {
    throw DimensionError("kalman_gain: h has " + std::to_string(obs.h.cols()) +
                         " cols, expected " + std::to_string(b.rows()));
  }
  const Matrix hb = obs.h * b;  // n_obs x n_state
  Matrix s = hb * obs.h.transpose();
  s.diagonal() += obs.r_diag;
  const auto ldlt = s.ldlt();
  if (ldlt.info() != Eigen::Success) {
    throw LinearAlgebraError("kalman_gain: innovation matrix factorization failed");
  }
  // K = B H^T S^{-1}; with B symmetric, K^T = S^{-1} H B.
  Matrix gain = ldlt.solve(hb).transpose();
  if (!gain.allFinite()) {
    throw LinearAlgebraError("kalman_gain: innovation matrix numerically singular");
  }
  return gain;
}

Ensemble analysis_stochastic_with_perturbations(const Ensemble& ens,
                                                const ObservationBatch& obs,
                                                const Matrix& gain,
                                                const Matrix& zeta) {
  obs.validate();
  if (gain.rows() != ens.n_state() || gain.cols() != obs.n_obs()) {
    throw DimensionError("analysis: gain shape mismatch");
  }
  if (obs.h.cols() != ens.n_state()) {
    throw DimensionError("analysis: h shape mismatch");
  }
  if (zeta.rows() != obs.n_obs() || zeta.cols() != ens.n_ens()) {
    throw DimensionError("analysis: zeta shape mismatch");
  }
  // Innovations per member: y + zeta_e - H x_e.
  const Matrix innov =
      ((zeta.colwise() + obs.y) - obs.h * ens.members).eval();
  Ensemble out = ens;
  out.members = ens.members + gain * innov;
  return out;
}

Ensemble analysis_stochastic(const Ensemble& ens, const ObservationBatch& obs,
                             const Matrix& gain, Rng& rng) {
  obs.validate();
  Matrix zeta(obs.n_obs(), ens.n_ens());
  for (int e = 0; e < ens.n_ens(); ++e) {
    for (int j = 0; j < obs.n_obs(); ++j) {
      zeta(j, e) = std::sqrt(obs.r_diag[j]) * rng.normal();
    }
  }
  return analysis_stochastic_with_perturbations(ens, obs, gain, zeta);
}

Ensemble analysis_deterministic(const Ensemble& ens,
                                const ObservationBatch& obs,
                                const Matrix& gain) {
  obs.validate();
  if (gain.rows() != ens.n_state() || gain.cols() != obs.n_obs()) {
    throw DimensionError("analysis: gain shape mismatch");
  }
  if (obs.h.cols() != ens.n_state()) {
    throw DimensionError("analysis: h shape mismatch");
  }
  const Vector mf = mean(ens);
  const Matrix af = anomalies(ens);
  const Vector ma = mf + gain * (obs.y - obs.h * mf);
  const Matrix aa = af - 0.5 * gain * (obs.h * af);
  Ensemble out = ens;
  out.members = aa.colwise() + ma;
  return out;
}

}  // namespace adaloc
