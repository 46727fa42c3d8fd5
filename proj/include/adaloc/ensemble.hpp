#pragma once

#include "adaloc/types.hpp"

namespace adaloc {

// Columns are members, rows are state components.
struct Ensemble {
  Matrix members;
  int time_index = 0;

  int n_state() const { return static_cast<int>(members.rows()); }
  int n_ens() const { return static_cast<int>(members.cols()); }
};

Vector mean(const Ensemble& ens);

// Member deviations from the ensemble mean, same shape as members.
Matrix anomalies(const Ensemble& ens);

// Sample covariance X' X'^T / (N_ens - 1); requires N_ens >= 2.
Matrix covariance(const Ensemble& ens);

// Scales anomalies about the mean by delta >= 1.
Ensemble inflate(const Ensemble& ens, double delta);

}  // namespace adaloc
