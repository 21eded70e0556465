#include <doctest.h>

#include <cmath>
#include <random>

#include "wml/operators.hpp"
#include "wml/profile.hpp"

using namespace wml;

namespace {

std::vector<double> grid(double a, double b, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = a + (b - a) * i / (n - 1);
  return x;
}

double maxabs(const RadialField& f) {
  double m = 0.0;
  for (double v : f.v) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("nonlinearity origin limit and zero field") {
  const WarpedTarget t(5, 0.03);
  const int n = t.n();
  const double p = 1.3;
  const double limit = (n - 3) * p * p * p * t.eta(0.0, 3) / 6.0;
  CHECK(nonlinearity_at(t, 0.0, p) == doctest::Approx(limit).epsilon(1e-14));
  CHECK(nonlinearity_at(t, 1e-4, p) == doctest::Approx(limit).epsilon(1e-7));
  const auto rho = grid(0.0, 5.0, 51);
  CHECK(maxabs(apply_nonlinearity(t, make_field(rho, [](double) { return 0.0; }))) == 0.0);
  // eta_0'''(0) = 4
  const WarpedTarget t0(5, 0.0);
  const double b = 2.0 / std::sqrt(5.0 - 2.0);
  CHECK(nonlinearity_at(t0, 0.0, b) == doctest::Approx(4.0 * b * b * b * 4.0 / 6.0));
}

TEST_CASE("potential of the ground state") {
  // d = 5: psi_{0,1}(1) = f0(1) = pi/3 and V = (n-3)(1 - cos(2 f0))
  const WarpedTarget t(5, 0.0);
  CHECK(potential_at(t, 1.0, ground_state(5, 1.0)) == doctest::Approx(4.0 * 1.5).epsilon(1e-13));
  CHECK(potential_at(t, 0.0, 0.0) == 0.0);
  const double p = 0.9;
  CHECK(potential_at(t, 0.0, p) == doctest::Approx((t.n() - 3) * p * p * t.eta(0.0, 3) / 2.0));
  // rho^2 V tends to (n-3) eta'(c1) along the profile
  const auto sol = solve_profile(WarpedTarget(5, 0.02));
  const double lim = (t.n() - 3) * sol.target.eta(sol.c1, 1);
  auto gap = [&](double r) { return std::abs(r * r * potential_at(sol.target, r, sol.value(r) / r) - lim); };
  // the approach is O(1/rho)
  CHECK(gap(100.0) / gap(50.0) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("Taylor remainder scales quadratically") {
  const WarpedTarget t(3, 0.02);
  const double r = 0.8, psi = 1.7, u = 0.3;
  const double half_hessian = (t.n() - 3) / r * t.eta(r * psi, 2) * u * u / 2.0;
  const double q1 = remainder_at(t, r, psi, 1e-3 * u) / 1e-6;
  const double q2 = remainder_at(t, r, psi, 5e-4 * u) / 2.5e-7;
  const double richardson = 2.0 * q2 - q1;
  CHECK(richardson == doctest::Approx(half_hessian).epsilon(1e-6));
  CHECK(remainder_at(t, r, psi, 0.0) == 0.0);
  // at the origin the remainder is (n-3) eta'''(0)/6 ((psi+u)^3 - psi^3 - 3 psi^2 u)
  const double o = (t.n() - 3) * t.eta(0.0, 3) / 6.0 * (std::pow(psi + u, 3) - std::pow(psi, 3) - 3 * psi * psi * u);
  CHECK(remainder_at(t, 0.0, psi, u) == doctest::Approx(o).epsilon(1e-13));
}

TEST_CASE("decomposition of the nonlinearity") {
  const WarpedTarget t0(5, 0.0), te(5, 0.04);
  const auto rho = grid(0.0, 6.0, 121);
  const auto base = make_field(rho, [](double r) { return r == 0.0 ? 2.0 / std::sqrt(3.0) : ground_state(5, r) / r; });
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.1, 0.1);
  const double c1 = U(rng), c2 = U(rng), c3 = U(rng);
  const auto phi = make_field(rho, [&](double r) { return c1 + c2 * r * r * std::exp(-r * r) + c3 / (1 + r * r); });
  RadialField sum = base;
  for (std::size_t i = 0; i < sum.size(); ++i) sum.v[i] += phi.v[i];
  const auto lhs_a = apply_nonlinearity(te, sum), lhs_b = apply_nonlinearity(t0, base);
  const auto V0 = potential(t0, base), Vs = potential_shift(te, base);
  const auto Re = epsilon_remainder(te, base);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double r = rho[i];
    const double tilde = lhs_a.v[i] - apply_nonlinearity(te, base).v[i] - potential(te, base).v[i] * phi.v[i];
    const double rhs = V0.v[i] * phi.v[i] + Vs.v[i] * phi.v[i] + Re.v[i] + tilde;
    CHECK(std::abs(lhs_a.v[i] - lhs_b.v[i] - rhs) < 1e-11);
    if (r > 0) CHECK(std::abs(tilde - remainder_at(te, r, base.v[i], phi.v[i])) < 1e-11);
  }
  CHECK(maxabs(epsilon_remainder(t0, base)) == 0.0);
  const auto R1 = epsilon_remainder(WarpedTarget(5, 0.001), base), R2 = epsilon_remainder(WarpedTarget(5, 0.002), base);
  CHECK(maxabs(R2) / 0.002 == doctest::Approx(maxabs(R1) / 0.001).epsilon(1e-10));
}

TEST_CASE("free operator on polynomial fields") {
  // psi1 = 1 + rho^2, psi2 = rho^4
  const int n = 6;
  for (double r : {0.0, 0.5, 2.0}) {
    const auto L = free_operator(n, r, {1 + r * r, 2 * r, 2.0}, {std::pow(r, 4), 4 * std::pow(r, 3)});
    CHECK(L[0] == doctest::Approx(-2 * r * r - (1 + r * r) + std::pow(r, 4)));
    CHECK(L[1] == doctest::Approx(2.0 * n - 6 * std::pow(r, 4)));
  }
}

TEST_CASE("static residual and gauge mode") {
  const auto rho = grid(0.0, 20.0, 401);
  for (double e : {0.0, 0.02, -0.05}) {
    const auto sol = solve_profile(WarpedTarget(5, e));
    const auto res = static_residual(sol, rho);
    CHECK(maxabs(res.psi1) < 1e-9);
    CHECK(maxabs(res.psi2) < 1e-9);
    const auto g = gauge_mode(sol, rho);
    const auto st = static_fields(sol, rho);
    for (std::size_t i = 0; i < rho.size(); i += 20) {
      CHECK(g.psi1.v[i] == doctest::Approx(st.psi2.v[i]).epsilon(1e-12));
      // second = 2 first + Lambda first
      const double r = rho[i];
      const auto d = sol.eval(r);
      CHECK(g.psi2.v[i] == doctest::Approx(2 * d.f1 + r * d.f2).epsilon(1e-12).scale(1.0));
    }
  }
  const int n = 7;
  const auto sol = solve_profile(WarpedTarget(n - 2, 0.0));
  const auto g = gauge_mode(sol, rho);
  const double scale = 2.0 * std::sqrt(n - 4.0);
  for (std::size_t i = 0; i < rho.size(); i += 10)
    CHECK(g.psi1.v[i] == doctest::Approx(scale / (rho[i] * rho[i] + n - 4)).epsilon(1e-10));
}

TEST_CASE("make_field metadata") {
  const auto f = make_field({0.0, 1.0}, [](double r) { return r; }, 2);
  CHECK(f.component == 2);
  CHECK(f.parity == Parity::Even);
  CHECK(f.v[1] == 1.0);
}
