#pragma once

#include <string>
#include <vector>

#include "adaloc/enkf.hpp"
#include "adaloc/ensemble.hpp"
#include "adaloc/rng.hpp"
#include "adaloc/types.hpp"

namespace adaloc {

// Fixed ordering of the summary statistics handed to the regressor:
//   (a) forecast mean at strided state indices,
//   (b) global ensemble min and max,
//   (c) forecast variance at the same strided indices,
//   (d) correlations corr(i, i+d) for d = 1..corr_lag at strided i,
//       wrapping periodically (grouped per index, lag-minor),
//   (e) KL of the Beta fit to the forecast rank histogram,
//   (f) observation-space RMSE of the forecast mean.
struct FeatureLayout {
  int n_state = 0;
  int stride = 1;
  int corr_lag = 1;
  int n_strided = 0;
  int n_feat = 0;
  std::vector<std::string> names;
};

FeatureLayout make_feature_layout(int n_state, int stride, int corr_lag);

// Extracts the layout's statistics from a forecast ensemble and the cycle's
// observations.  Zero-variance components yield correlation 0; a degenerate
// rank histogram yields the criterion's KL penalty constant.  tie_rng feeds
// only rank ties, so tie-free inputs make the output a pure function.
Vector extract_features(const Ensemble& forecast_ens,
                        const ObservationBatch& obs, int stride, int corr_lag,
                        Rng& tie_rng);

}  // namespace adaloc
