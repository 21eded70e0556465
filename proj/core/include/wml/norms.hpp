#pragma once

#include <optional>
#include <vector>

#include "wml/operators.hpp"

namespace wml {

struct NormSpec {
  std::vector<int> orders{0, 1, 2};
  std::vector<double> weights{1.0, 2.0};  // exponents w of sup <rho>^w |psi|
  std::optional<double> s;                // fractional order, if requested
  int stencil = 7;                        // finite-difference stencil width
  int k_cap = 4;

  // Throws ValidationError when orders or s fall outside the admissible range for dimension n.
  void validate(int n) const;
};

struct NormValue {
  double value = 0.0;
  bool warning = false;  // value moved by more than 1e-6 (relative) against the every-other-node estimate
};

// Radial derivatives 0..order on a uniform grid rho_i = i h, even or odd reflection at 0.
std::vector<std::vector<double>> radial_derivatives(const RadialField& field, int order, int stencil = 7);

// Trapezoid rule with Gregory end corrections on a uniform grid.
double gregory_integral(const std::vector<double>& values, double h);

// (int_0^R |D^j psi|^2 rho^(n-1) drho)^(1/2)
NormValue sobolev_seminorm(const RadialField& field, int j, int n, int stencil = 7);

// (int_0^inf k^(2s) |F psi(k)|^2 k^(n-1) dk)^(1/2) with the unitary radial Fourier transform.
double fractional_norm(const RadialField& field, double s, int n);

// sup_rho (1 + rho^2)^(w/2) |psi|
double weighted_sup(const RadialField& field, double w);

struct DecayFit {
  double exponent = 0.0;
  double stderr_ = 0.0;
  bool sign_change = false;
  int points = 0;
};

// Log-log least-squares slope of |psi| on rho in [rho_min, rho_max].
DecayFit decay_exponent(const RadialField& field, double rho_min, double rho_max);

}  // namespace wml
