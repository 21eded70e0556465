#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "wml/profile.hpp"

namespace wml {

struct SpectralConfig {
  int N = 128;          // collocation order; the filter run uses N/2
  double x_max = 4.0;   // domain 0 <= x = rho^2 <= x_max
  double drift_tol = 1e-6;
};

// Two-component operator on Chebyshev nodes in x = rho^2.
// Unknowns are stacked as (psi1 at nodes, psi2 at nodes); node 0 is x = x_max, node N is x = 0.
struct SpectralProblem {
  int N = 0;
  int n = 0;
  double x_max = 0.0;
  Eigen::VectorXd x, rho, weights, V;
  Eigen::MatrixXd D, A;
};

SpectralProblem assemble(const ProfileSolution& profile, int N, double x_max = 4.0);
SpectralProblem assemble_free(int n, int N, double x_max = 4.0);

struct SpectrumReport {
  int N = 0;
  std::vector<std::complex<double>> eigenvalues;  // sorted by decreasing real part
  std::vector<double> drift;                      // distance to the N/2 spectrum, relative
  std::vector<bool> converged;
  int gauge_index = -1;
  std::complex<double> gauge{0.0, 0.0};
  double gauge_drift = 0.0;
  double gauge_residual = 0.0;  // |(A - lambda) r| / |r|
  double gap = 0.0;             // -max Re over converged eigenvalues other than the gauge one
  double max_unconverged_re = 0.0;
  Eigen::VectorXd right, left, weights;  // left is scaled so that <left, right>_W = 1
  Eigen::VectorXd rho;
};

SpectrumReport eigen(const SpectralProblem& fine, const SpectralProblem& coarse,
                     double drift_tol = 1e-6, double gauge_scale = 1.0);
SpectrumReport analyze_spectrum(const ProfileSolution& profile, const SpectralConfig& cfg = {});

// Residual of the lambda = 1 radial eigenvalue equation for w = psi2 of the profile.
double verify_gauge_ode(const ProfileSolution& profile, const std::vector<double>& rho);
double verify_gauge_ode(const ProfileSolution& profile);

struct Projector {
  Eigen::VectorXd r, l, w;  // right vector, left vector, inner-product weights (per component)

  double coefficient(const Eigen::VectorXd& u) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
};

Projector unstable_projection(const SpectrumReport& report);

}  // namespace wml
