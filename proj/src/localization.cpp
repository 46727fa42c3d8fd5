#include "adaloc/localization.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "adaloc/errors.hpp"

namespace adaloc {

double gc_taper(double z, double c) {
  if (!(c > 0.0)) {
    throw ParameterError("gc_taper: c must be positive");
  }
  if (z < 0.0) {
    throw ParameterError("gc_taper: z must be >= 0");
  }
  const double s = z / c;
  if (s < 1.0) {
    return ((((-0.25 * s + 0.5) * s + 0.625) * s - 5.0 / 3.0) * s * s) + 1.0;
  }
  if (s < 2.0) {
    return ((((s / 12.0 - 0.5) * s + 0.625) * s + 5.0 / 3.0) * s - 5.0) * s +
           4.0 - (2.0 / 3.0) / s;
  }
  return 0.0;
}

double gaussian_taper(double z, double l) {
  if (!(l > 0.0)) {
    throw ParameterError("gaussian_taper: l must be positive");
  }
  if (z < 0.0) {
    throw ParameterError("gaussian_taper: z must be >= 0");
  }
  return std::exp(-z * z / (2.0 * l * l));
}

double gc_correlation_length(double l) {
  return std::sqrt(10.0 / 3.0) * l;
}

double grid_distance(int i, int j, int k) {
  if (k < 1) {
    throw ParameterError("grid_distance: k must be >= 1");
  }
  if (i < 0 || i >= k || j < 0 || j >= k) {
    throw IndexError("grid_distance: index out of range");
  }
  const int d = std::abs(i - j);
  return static_cast<double>(std::min(d, k - d));
}

LocalizationSpec LocalizationSpec::scalar(Taper taper, double radius) {
  LocalizationSpec spec;
  spec.taper = taper;
  spec.radii = Vector::Constant(1, radius);
  spec.validate();
  return spec;
}

LocalizationSpec LocalizationSpec::per_variable(Taper taper, Vector radii) {
  LocalizationSpec spec;
  spec.taper = taper;
  spec.radii = std::move(radii);
  spec.validate();
  return spec;
}

void LocalizationSpec::validate() const {
  if (radii.size() == 0) {
    throw ParameterError("LocalizationSpec: radii must not be empty");
  }
  for (Eigen::Index i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || !std::isfinite(radii[i])) {
      throw ParameterError("LocalizationSpec: radii must be positive, entry " +
                           std::to_string(i) + " is " +
                           std::to_string(radii[i]));
    }
  }
}

Matrix build_rho(const LocalizationSpec& spec, int n_state) {
  spec.validate();
  if (n_state < 1) {
    throw ParameterError("build_rho: n_state must be >= 1");
  }
  if (!spec.is_scalar() && spec.radii.size() != n_state) {
    throw DimensionError("build_rho: radius vector has size " +
                         std::to_string(spec.radii.size()) + ", expected " +
                         std::to_string(n_state));
  }

  const auto taper_at = [&](double z, double l) {
    return spec.taper == Taper::gaspari_cohn
               ? gc_taper(z, gc_correlation_length(l))
               : gaussian_taper(z, l);
  };

  Matrix rho(n_state, n_state);
  for (int i = 0; i < n_state; ++i) {
    rho(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      const double l = spec.is_scalar()
                           ? spec.radii[0]
                           : 0.5 * (spec.radii[i] + spec.radii[j]);
      const double value = taper_at(grid_distance(i, j, n_state), l);
      rho(i, j) = value;
      rho(j, i) = value;
    }
  }
  return rho;
}

Matrix localize_covariance(const Matrix& b, const Matrix& rho) {
  if (b.rows() != rho.rows() || b.cols() != rho.cols()) {
    throw DimensionError("localize_covariance: shape mismatch");
  }
  return b.cwiseProduct(rho);
}

}  // namespace adaloc
