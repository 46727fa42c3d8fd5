#include "adaloc/lorenz96.hpp"

#include <cmath>
#include <string>

#include "adaloc/errors.hpp"

namespace adaloc {

void Lorenz96Config::validate() const {
  if (k < 4) {
    throw ParameterError("Lorenz96Config: k must be >= 4, got " +
                         std::to_string(k));
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ParameterError("Lorenz96Config: dt must be positive and finite");
  }
  if (!std::isfinite(f)) {
    throw ParameterError("Lorenz96Config: f must be finite");
  }
}

Vector tendency(const Lorenz96Config& cfg, const Vector& x) {
  cfg.validate();
  const int k = cfg.k;
  if (x.size() != k) {
    throw DimensionError("tendency: state has size " +
                         std::to_string(x.size()) + ", expected " +
                         std::to_string(k));
  }
  Vector dx(k);
  for (int i = 0; i < k; ++i) {
    const int im2 = (i + k - 2) % k;
    const int im1 = (i + k - 1) % k;
    const int ip1 = (i + 1) % k;
    dx[i] = (x[ip1] - x[im2]) * x[im1] - x[i] + cfg.f;
  }
  return dx;
}

Vector step_rk4(const Lorenz96Config& cfg, const Vector& x) {
  const double dt = cfg.dt;
  const Vector k1 = tendency(cfg, x);
  const Vector k2 = tendency(cfg, x + 0.5 * dt * k1);
  const Vector k3 = tendency(cfg, x + 0.5 * dt * k2);
  const Vector k4 = tendency(cfg, x + dt * k3);
  Vector out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) {
    throw IntegrationError("step_rk4: non-finite state after step");
  }
  return out;
}

Vector equidistant_initial(int k) {
  if (k < 4) {
    throw ParameterError("equidistant_initial: k must be >= 4");
  }
  return Vector::LinSpaced(k, -2.0, 2.0);
}

Vector spin_up(const Lorenz96Config& cfg, long n_steps) {
  cfg.validate();
  if (n_steps < 0) {
    throw ParameterError("spin_up: n_steps must be >= 0");
  }
  Vector x = equidistant_initial(cfg.k);
  for (long s = 0; s < n_steps; ++s) {
    x = step_rk4(cfg, x);
  }
  return x;
}

}  // namespace adaloc
