#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wml/geometry.hpp"

namespace wml {

// Local power series of f around rho = 0, rho = 1 or rho = infinity.
// Origin and light cone: f = sum coef[k] (rho - center)^k.
// Infinity: f = sum coef[k] rho^{-k}, so coef[0] = c1 and coef[1] = -ctilde1.
struct FrobeniusSeries {
  enum class Center { Origin, LightCone, Infinity };

  Center center = Center::Origin;
  std::vector<double> coef;
  std::vector<int> free;      // indices of coefficients left free by the recurrence
  int resonance = -1;         // light cone: index with vanishing multiplier, -1 if none
  double compat_residual = 0.0;
  double radius = 0.2;        // radius of use around the center

  // k-th rho-derivative of the truncated series, k <= 3.
  double eval(double rho, int k = 0) const;
  // psi1 = f / rho and its first two derivatives (origin series only).
  double eval_over_rho(double rho, int k = 0) const;
};

FrobeniusSeries series_at_origin(const WarpedTarget& target, double b, int order);
// For odd d the coefficient at the resonant index is set to `free_coef`; the compatibility
// condition on (a, eps) is reported in compat_residual. For even d `free_coef` is ignored.
FrobeniusSeries series_at_lightcone(const WarpedTarget& target, double a, int order,
                                    double free_coef = 0.0);
// Same, but throws NoAnalyticBranch if the compatibility residual exceeds `tol`.
FrobeniusSeries series_at_lightcone_checked(const WarpedTarget& target, double a, int order,
                                            double free_coef, double tol);
FrobeniusSeries series_at_infinity(const WarpedTarget& target, double c1, double c2, int order);

// Index k with k(d - 1 - 2k) = 0, k >= 1, or -1 for even d.
int lightcone_resonance(int d);
// For odd d: the light-cone value a solving the compatibility condition, near `guess`.
double solve_lightcone_value(const WarpedTarget& target, double guess, int order = 48);

// Residuals of the profile equation in the f and u = f/rho forms.
double residual_f(const WarpedTarget& t, double rho, double f, double fp, double fpp);
double residual_u(const WarpedTarget& t, double rho, double u, double up, double upp);
// f'' and f''' from the equation, valid away from rho = 0 and rho = 1.
double second_derivative(const WarpedTarget& t, double rho, double f, double fp);
double third_derivative(const WarpedTarget& t, double rho, double f, double fp, double fpp);

// Closed form profile at eps = 0.
double ground_state(int d, double rho, int k = 0);

struct ProfileConfig {
  int series_order = 48;
  double rho_series = 0.2;
  double rho_match = 0.5;
  double R_max = 100.0;
  double ode_tol = 1e-14;
  double newton_tol = 1e-12;
  int newton_max = 40;
  double continuation_step = 0.01;
  double min_step = 1e-4;
  double residual_tol = 1e-10;
  int piece_order = 24;       // Chebyshev order of each sampled piece
  int interior_pieces = 4;
  double exterior_ratio = 2.0;
};

struct CollocationConfig {
  int N = 64;
  bool picard = false;  // frozen eps = 0 linearization instead of full Newton
  int max_iter = 200;
  double tol = 1e-12;
};

struct ProfileDerivs {
  double f = 0, f1 = 0, f2 = 0, f3 = 0;  // f and rho-derivatives
  double u = 0, u1 = 0, u2 = 0;          // psi1 = f / rho and rho-derivatives
};

class ProfileCurve {
 public:
  virtual ~ProfileCurve() = default;
  virtual ProfileDerivs eval(double rho) const = 0;
};

struct ShootParams {
  double b = 0.0;  // f'(0)
  double a = 0.0;  // f(1)
  double c = 0.0;  // resonant light-cone coefficient (odd d only)
};

struct ProfileSolution {
  WarpedTarget target{3, 0.0};
  std::string method;
  double b = 0.0, a = 0.0, c = 0.0;
  double c1 = 0.0, ctilde1 = 0.0;
  double c1_richardson = 0.0, ctilde1_richardson = 0.0;
  double residual_norm = 0.0;
  double R_max = 0.0;
  int iterations = 0;
  double eps_reached = 0.0;
  FrobeniusSeries series0, series1, series_inf;
  // Shooting: Chebyshev pieces between `breaks` (the light-cone piece is a placeholder).
  // Collocation: nodes in rho. Either way f and fp are the values at `grid`.
  std::vector<double> grid, f, fp;
  std::vector<double> breaks;
  int piece_order = 0;
  std::vector<double> y_nodes, u_nodes;  // collocation only
  std::shared_ptr<const ProfileCurve> curve;

  ProfileDerivs eval(double rho) const { return curve->eval(rho); }
  double value(double rho) const { return curve->eval(rho).f; }
  double psi1(double rho, int k = 0) const;
  double psi2(double rho, int k = 0) const;
};

std::array<double, 2> shoot_interior(const WarpedTarget& target, const ShootParams& p,
                                     const ProfileConfig& cfg = {});

ProfileSolution solve_profile(const WarpedTarget& target, const ProfileConfig& cfg = {});
// Newton on (b, a or c) from a given seed, no continuation.
ProfileSolution solve_profile_from(const WarpedTarget& target, ShootParams seed,
                                   const ProfileConfig& cfg = {});
ShootParams ground_state_params(int d, int order = 48);

ProfileSolution newton_collocation(const WarpedTarget& target,
                                   const std::function<double(double)>& f_guess,
                                   const CollocationConfig& cfg = {});

// Rebuilds the evaluator of a solution whose data fields were loaded from disk.
void rebuild_curve(ProfileSolution& sol);

struct LipschitzEntry {
  double eps = 0.0, kappa = 0.0;
  std::array<double, 3> sup{};  // sup of |q|, |q'|, |q''|, q = (phi_eps - phi_kappa)/(rho (eps - kappa))
};

struct LipschitzReport {
  std::vector<LipschitzEntry> pairs;
  std::array<double, 3> max{};
};

LipschitzReport lipschitz_in_epsilon(const std::vector<ProfileSolution>& profiles,
                                     const std::vector<double>& rho_grid);

}  // namespace wml
