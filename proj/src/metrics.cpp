#include "adaloc/metrics.hpp"

#include <cmath>
#include <string>

#include "adaloc/errors.hpp"

namespace adaloc {

double rmse(const Vector& x, const Vector& ref) {
  if (x.size() != ref.size() || x.size() == 0) {
    throw DimensionError("rmse: size mismatch");
  }
  return (x - ref).norm() / std::sqrt(static_cast<double>(x.size()));
}

double obs_rmse(const Vector& x, const ObservationBatch& obs) {
  obs.validate();
  if (obs.h.cols() != x.size()) {
    throw DimensionError("obs_rmse: state size mismatch");
  }
  return (obs.h * x - obs.y).norm() /
         std::sqrt(static_cast<double>(obs.n_obs()));
}

RankHistogram rank_histogram(const Ensemble& ens, const ObservationBatch& obs,
                             Rng& tie_rng) {
  obs.validate();
  if (obs.h.cols() != ens.n_state()) {
    throw DimensionError("rank_histogram: state size mismatch");
  }
  if (ens.n_ens() < 1) {
    throw DimensionError("rank_histogram: empty ensemble");
  }
  const Matrix proj = obs.h * ens.members;  // n_obs x n_ens
  RankHistogram hist;
  hist.counts.assign(static_cast<std::size_t>(ens.n_ens()) + 1, 0);
  for (int j = 0; j < obs.n_obs(); ++j) {
    int rank = 0;
    for (int e = 0; e < ens.n_ens(); ++e) {
      const double v = proj(j, e);
      if (v < obs.y[j]) {
        ++rank;
      } else if (v == obs.y[j] && tie_rng.coin()) {
        ++rank;
      }
    }
    ++hist.counts[rank];
    ++hist.n_samples;
  }
  return hist;
}

void merge(RankHistogram& a, const RankHistogram& b) {
  if (a.counts.size() != b.counts.size()) {
    throw DimensionError("merge: histograms have different bin counts");
  }
  for (std::size_t r = 0; r < a.counts.size(); ++r) {
    a.counts[r] += b.counts[r];
  }
  a.n_samples += b.n_samples;
}

BetaParams fit_beta(const RankHistogram& hist) {
  if (hist.counts.size() < 2) {
    throw DegenerateHistogramError("fit_beta: histogram needs >= 1 member");
  }
  if (hist.n_samples < 2) {
    throw DegenerateHistogramError("fit_beta: needs at least 2 samples, got " +
                                   std::to_string(hist.n_samples));
  }
  const double n_bins = static_cast<double>(hist.counts.size());
  const double n = static_cast<double>(hist.n_samples);
  double m = 0.0;
  for (std::size_t r = 0; r < hist.counts.size(); ++r) {
    const double u = (static_cast<double>(r) + 0.5) / n_bins;
    m += static_cast<double>(hist.counts[r]) * u;
  }
  m /= n;
  double v = 0.0;
  for (std::size_t r = 0; r < hist.counts.size(); ++r) {
    const double u = (static_cast<double>(r) + 0.5) / n_bins;
    v += static_cast<double>(hist.counts[r]) * (u - m) * (u - m);
  }
  v /= n;
  if (!(v > 0.0)) {
    throw DegenerateHistogramError("fit_beta: zero variance across ranks");
  }
  const double t = m * (1.0 - m) / v - 1.0;
  constexpr double kFloor = 1e-3;
  BetaParams p;
  p.alpha = std::max(m * t, kFloor);
  p.beta = std::max((1.0 - m) * t, kFloor);
  return p;
}

double digamma(double x) {
  if (!(x > 0.0)) {
    throw ParameterError("digamma: x must be positive");
  }
  double acc = 0.0;
  while (x < 8.0) {  // shift into the asymptotic regime
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  const double series =
      inv2 *
      (1.0 / 12.0 -
       inv2 * (1.0 / 120.0 -
               inv2 * (1.0 / 252.0 -
                       inv2 * (1.0 / 240.0 -
                               inv2 * (1.0 / 132.0 -
                                       inv2 * (691.0 / 32760.0 -
                                               inv2 / 12.0))))));
  return acc + std::log(x) - 0.5 / x - series;
}

namespace {

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

double kl_beta_uniform(const BetaParams& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0) || !std::isfinite(p.alpha) ||
      !std::isfinite(p.beta)) {
    throw ParameterError("kl_beta_uniform: parameters must be positive");
  }
  const double a = p.alpha;
  const double b = p.beta;
  return -log_beta(a, b) + (a - 1.0) * digamma(a) + (b - 1.0) * digamma(b) -
         (a + b - 2.0) * digamma(a + b);
}

void CriterionWeights::validate() const {
  if (!(w1 >= 0.0) || !(w2 >= 0.0) || !std::isfinite(w1) ||
      !std::isfinite(w2)) {
    throw ParameterError("CriterionWeights: weights must be >= 0");
  }
  if (!(w1 + w2 > 0.0)) {
    throw ParameterError("CriterionWeights: weights must not both be zero");
  }
}

double criterion(const Ensemble& analysis, const ObservationBatch& obs,
                 const CriterionWeights& w, Rng& tie_rng) {
  w.validate();
  const double rmse_term = obs_rmse(mean(analysis), obs);
  double kl_term = 0.0;
  if (w.w2 > 0.0) {
    try {
      kl_term = kl_beta_uniform(fit_beta(rank_histogram(analysis, obs, tie_rng)));
    } catch (const DegenerateHistogramError&) {
      kl_term = kDegenerateKlPenalty;
    }
  }
  return w.w1 * rmse_term + w.w2 * kl_term;
}

}  // namespace adaloc
