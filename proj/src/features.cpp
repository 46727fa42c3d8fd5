#include "adaloc/features.hpp"

#include <cmath>

#include "adaloc/errors.hpp"
#include "adaloc/metrics.hpp"

namespace adaloc {

namespace {

void validate_layout_args(int n_state, int stride, int corr_lag) {
  if (n_state < 1) {
    throw ParameterError("features: n_state must be >= 1");
  }
  if (stride < 1 || stride > n_state) {
    throw ParameterError("features: stride must be in [1, n_state], got " +
                         std::to_string(stride));
  }
  if (corr_lag < 1 || 2 * corr_lag >= n_state) {
    throw ParameterError("features: corr_lag must be in [1, n_state/2), got " +
                         std::to_string(corr_lag));
  }
}

}  // namespace

FeatureLayout make_feature_layout(int n_state, int stride, int corr_lag) {
  validate_layout_args(n_state, stride, corr_lag);
  FeatureLayout layout;
  layout.n_state = n_state;
  layout.stride = stride;
  layout.corr_lag = corr_lag;
  layout.n_strided = (n_state + stride - 1) / stride;
  layout.n_feat = 2 * layout.n_strided + 2 + layout.n_strided * corr_lag + 2;
  layout.names.reserve(layout.n_feat);
  for (int i = 0; i < n_state; i += stride) {
    layout.names.push_back("mean_i" + std::to_string(i));
  }
  layout.names.push_back("min");
  layout.names.push_back("max");
  for (int i = 0; i < n_state; i += stride) {
    layout.names.push_back("var_i" + std::to_string(i));
  }
  for (int i = 0; i < n_state; i += stride) {
    for (int d = 1; d <= corr_lag; ++d) {
      layout.names.push_back("corr_i" + std::to_string(i) + "_d" +
                             std::to_string(d));
    }
  }
  layout.names.push_back("fc_rank_kl");
  layout.names.push_back("fc_obs_rmse");
  return layout;
}

Vector extract_features(const Ensemble& forecast_ens,
                        const ObservationBatch& obs, int stride, int corr_lag,
                        Rng& tie_rng) {
  const int k = forecast_ens.n_state();
  validate_layout_args(k, stride, corr_lag);
  obs.validate();
  if (obs.h.cols() != k) {
    throw DimensionError("extract_features: observation operator mismatch");
  }
  if (forecast_ens.n_ens() < 2) {
    throw DegenerateEnsembleError("extract_features: needs >= 2 members");
  }
  if (!forecast_ens.members.allFinite()) {
    throw ParameterError("extract_features: non-finite ensemble");
  }

  const FeatureLayout layout = make_feature_layout(k, stride, corr_lag);
  const Vector m = mean(forecast_ens);
  const Matrix a = anomalies(forecast_ens);
  const double denom = static_cast<double>(forecast_ens.n_ens() - 1);
  const Vector var = a.rowwise().squaredNorm() / denom;

  Vector out(layout.n_feat);
  int pos = 0;
  for (int i = 0; i < k; i += stride) {
    out[pos++] = m[i];
  }
  out[pos++] = forecast_ens.members.minCoeff();
  out[pos++] = forecast_ens.members.maxCoeff();
  for (int i = 0; i < k; i += stride) {
    out[pos++] = var[i];
  }
  for (int i = 0; i < k; i += stride) {
    for (int d = 1; d <= corr_lag; ++d) {
      const int j = (i + d) % k;
      if (var[i] > 0.0 && var[j] > 0.0) {
        const double cov = a.row(i).dot(a.row(j)) / denom;
        out[pos++] = cov / std::sqrt(var[i] * var[j]);
      } else {
        out[pos++] = 0.0;
      }
    }
  }
  double kl = kDegenerateKlPenalty;
  try {
    kl = kl_beta_uniform(fit_beta(rank_histogram(forecast_ens, obs, tie_rng)));
  } catch (const DegenerateHistogramError&) {
  }
  out[pos++] = kl;
  out[pos++] = obs_rmse(m, obs);
  return out;
}

}  // namespace adaloc
