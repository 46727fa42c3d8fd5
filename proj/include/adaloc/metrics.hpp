#pragma once

#include <cstdint>
#include <vector>

#include "adaloc/enkf.hpp"
#include "adaloc/ensemble.hpp"
#include "adaloc/rng.hpp"
#include "adaloc/types.hpp"

namespace adaloc {

// ||x - ref||_2 / sqrt(N); both in state space.
double rmse(const Vector& x, const Vector& ref);

// ||H x - y||_2 / sqrt(N_obs); the observation-space analogue.
double obs_rmse(const Vector& x, const ObservationBatch& obs);

// Talagrand rank tallies: counts[r] is how many observation components fell
// with exactly r projected members strictly below them.
struct RankHistogram {
  std::vector<std::int64_t> counts;  // size n_ens + 1
  std::int64_t n_samples = 0;

  int n_ens() const { return static_cast<int>(counts.size()) - 1; }
};

// Ranks each observation component against the projected members.  Exact
// ties count as "below" with probability 1/2, drawn from tie_rng in
// component-major, member-minor order.
RankHistogram rank_histogram(const Ensemble& ens, const ObservationBatch& obs,
                             Rng& tie_rng);

// Adds the tallies of b into a; bin counts must agree.
void merge(RankHistogram& a, const RankHistogram& b);

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

// Method-of-moments Beta fit to the ranks mapped into (0,1) via
// u = (rank + 1/2) / (n_ens + 1).  With m = mean(u), v = var(u):
//   t = m (1 - m) / v - 1,  alpha = m t,  beta = (1 - m) t,
// both clamped below at 1e-3.  A flat histogram fits close to
// Beta(1, 1); U-shapes fit alpha, beta < 1; humps fit > 1.
BetaParams fit_beta(const RankHistogram& hist);

// KL(Beta(alpha, beta) || Beta(1, 1)) in closed form,
//   -ln B(a, b) + (a-1) psi(a) + (b-1) psi(b) - (a+b-2) psi(a+b).
double kl_beta_uniform(const BetaParams& p);

double digamma(double x);

struct CriterionWeights {
  double w1 = 0.7;  // observation-space RMSE of the analysis mean
  double w2 = 0.3;  // rank-histogram uniformity (KL) term

  void validate() const;
};

// KL substitute when the rank histogram is degenerate (zero spread).
inline constexpr double kDegenerateKlPenalty = 10.0;

// C = w1 * obs_rmse(mean, obs) + w2 * KL(fitted Beta || uniform).
// tie_rng feeds only the rank-tie coin flips.
double criterion(const Ensemble& analysis, const ObservationBatch& obs,
                 const CriterionWeights& w, Rng& tie_rng);

}  // namespace adaloc
