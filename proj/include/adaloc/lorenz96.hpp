#pragma once

#include "adaloc/types.hpp"

namespace adaloc {

// Forced dissipative ring model
//
//   dX_k/dt = (X_{k+1} - X_{k-2}) X_{k-1} - X_k + F,   k = 0..K-1 (periodic)
//
// with the chaotic standard configuration K = 40, F = 8.
struct Lorenz96Config {
  int k = 40;
  double f = 8.0;
  double dt = 0.005;

  void validate() const;
};

Vector tendency(const Lorenz96Config& cfg, const Vector& x);

// One classical fourth-order Runge-Kutta step of length cfg.dt.
Vector step_rk4(const Lorenz96Config& cfg, const Vector& x);

// Equidistant profile spanning [-2, 2], the seed state for spin-up.
Vector equidistant_initial(int k);

// Integrates the equidistant profile n_steps forward; the result is the
// on-attractor reference initial condition for a twin experiment.
Vector spin_up(const Lorenz96Config& cfg, long n_steps);

}  // namespace adaloc
