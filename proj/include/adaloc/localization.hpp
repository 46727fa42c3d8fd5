#pragma once

#include "adaloc/types.hpp"

namespace adaloc {

enum class Taper { gaspari_cohn, gaussian };

// Fifth-order piecewise-rational compact taper.  c is the correlation
// length; support ends at 2c.  The two polynomial branches meet at
// rho(c) = 5/24 and the function decays smoothly to rho(2c) = 0.
double gc_taper(double z, double c);

// exp(-z^2 / (2 l^2)); positive everywhere, no compact support.
double gaussian_taper(double z, double l);

// Converts a localization radius l into the Gaspari-Cohn correlation
// length c = sqrt(10/3) * l, so that both tapers share one radius scale.
double gc_correlation_length(double l);

// Shortest periodic distance between grid indices on a ring of size k.
double grid_distance(int i, int j, int k);

// A scalar radius applies one length everywhere; a per-variable radius
// vector of size n_state is symmetrized pairwise, l_ij = (r_i + r_j) / 2.
struct LocalizationSpec {
  Taper taper = Taper::gaspari_cohn;
  Vector radii;  // size 1 (scalar) or n_state (per-variable)

  static LocalizationSpec scalar(Taper taper, double radius);
  static LocalizationSpec per_variable(Taper taper, Vector radii);
  bool is_scalar() const { return radii.size() == 1; }
  void validate() const;
};

// Dense n_state x n_state taper matrix with unit diagonal.
Matrix build_rho(const LocalizationSpec& spec, int n_state);

// Schur (elementwise) product rho o b.
Matrix localize_covariance(const Matrix& b, const Matrix& rho);

}  // namespace adaloc
