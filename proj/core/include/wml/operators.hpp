#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "wml/geometry.hpp"
#include "wml/profile.hpp"

namespace wml {

enum class Parity { Even, Odd };

struct RadialField {
  std::vector<double> rho;
  std::vector<double> v;
  Parity parity = Parity::Even;
  int component = 1;

  std::size_t size() const { return v.size(); }
};

RadialField make_field(const std::vector<double>& rho, const std::function<double(double)>& fn, int component = 1);

// (n-3) rho^-3 eta(rho psi1)
RadialField apply_nonlinearity(const WarpedTarget& t, const RadialField& psi1);
// (n-3) rho^-2 eta'(rho psi1)
RadialField potential(const WarpedTarget& t, const RadialField& base_psi1);
// (n-3) rho^-3 [eta(rho(psi+u)) - eta(rho psi) - eta'(rho psi) rho u]
RadialField nonlinear_remainder(const WarpedTarget& t, const RadialField& base_psi1, const RadialField& u1);
// (n-3) rho^-3 [eta_eps(rho psi0) - eta_0(rho psi0)]
RadialField epsilon_remainder(const WarpedTarget& t, const RadialField& psi0_1);
// (n-3) rho^-2 [eta_eps'(rho psi0) - eta_0'(rho psi0)]
RadialField potential_shift(const WarpedTarget& t, const RadialField& psi0_1);

// Pointwise scalar versions used by the evolution and spectral assembly.
double nonlinearity_at(const WarpedTarget& t, double rho, double psi1);
double potential_at(const WarpedTarget& t, double rho, double psi1);
double remainder_at(const WarpedTarget& t, double rho, double psi1, double u1);

// Free operator of the first-order system from radial derivative data.
// psi1 = (value, first, second derivative), psi2 = (value, first derivative).
std::array<double, 2> free_operator(int n, double rho, const std::array<double, 3>& psi1,
                                    const std::array<double, 2>& psi2);

struct StaticFields {
  RadialField psi1, psi2;
};

StaticFields static_fields(const ProfileSolution& profile, const std::vector<double>& rho);
// Both components of L~ Psi + N(Psi) for the profile's static state.
StaticFields static_residual(const ProfileSolution& profile, const std::vector<double>& rho);
// g = (psi1 + Lambda psi1, 2 psi1 + 3 Lambda psi1 + Lambda^2 psi1) = (f', 2 f' + rho f'')
StaticFields gauge_mode(const ProfileSolution& profile, const std::vector<double>& rho);

}  // namespace wml
