#include <doctest.h>

#include <cmath>

#include "wml/errors.hpp"
#include "wml/evolution.hpp"
#include "wml/operators.hpp"

using namespace wml;

namespace {

EvolutionConfig coarse(int grid) {
  EvolutionConfig c;
  c.grid = grid;
  return c;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b, std::size_t upto) {
  double m = 0.0;
  for (std::size_t i = 0; i < upto; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("initial data") {
  const auto sol = solve_profile(WarpedTarget(3, 0.02));
  const Evolver ev(sol, coarse(256));
  const auto st = ev.static_state();
  const auto s1 = ev.initial_data(1.0, {});
  CHECK(sup_diff(s1.psi1, st.psi1, st.rho.size()) == 0.0);
  CHECK(sup_diff(s1.psi2, st.psi2, st.rho.size()) == 0.0);

  const auto sT = ev.initial_data(1.01, {});
  const auto g = gauge_mode(sol, st.rho);
  double err = 0.0;
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    err = std::max(err, std::abs(sT.psi1[i] - st.psi1[i] - 0.01 * g.psi1.v[i]));
    err = std::max(err, std::abs(sT.psi2[i] - st.psi2[i] - 0.01 * g.psi2.v[i]));
  }
  CHECK(err < 5e-4);
  CHECK(err > 1e-6);

  Perturbation v;
  v.shape = "bump";
  v.amplitude = 1e-2;
  const auto sb = ev.initial_data(1.0, v);
  for (std::size_t i = 0; i < st.rho.size(); i += 16) {
    const auto p = ev.perturbation_at(v, st.rho[i]);
    CHECK(sb.psi1[i] - st.psi1[i] == doctest::Approx(p[0]).epsilon(1e-12).scale(1e-14));
    CHECK(sb.psi2[i] - st.psi2[i] == doctest::Approx(p[1]).epsilon(1e-12).scale(1e-14));
    if (st.rho[i] >= v.support) CHECK(p[0] == 0.0);
  }
  CHECK_THROWS_AS(ev.initial_data(1.2, {}), ValidationError);
  v.support = 9.0;
  CHECK_THROWS_AS(ev.initial_data(1.0, v), ValidationError);
}

TEST_CASE("config validation") {
  EvolutionConfig c;
  CHECK_NOTHROW(c.validate());
  c.perturbation.shape = "square";
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.dt = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.R = 0.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("static state is a fixed point and zero stays zero") {
  const auto sol = solve_profile(WarpedTarget(5, -0.02));
  const Evolver ev(sol, coarse(1024));
  auto s = ev.static_state();
  for (int k = 0; k < 100; ++k) REQUIRE(ev.step(s, ev.dt()));
  const auto st = ev.static_state();
  // fourth-order stencils for rho <= 2, second-order upwinding outside rho_s = 3
  const std::size_t inner = 2 * 1024 / 8 + 1;
  CHECK(sup_diff(s.psi1, st.psi1, inner) < 2e-9);
  CHECK(sup_diff(s.psi2, st.psi2, inner) < 2e-9);
  CHECK(sup_diff(s.psi1, st.psi1, s.rho.size()) < 1e-6);
  CHECK(sup_diff(s.psi2, st.psi2, s.rho.size()) < 1e-6);

  const Evolver ev0(solve_profile(WarpedTarget(3, 0.0)), coarse(256));
  auto z = ev0.static_state();
  std::fill(z.psi1.begin(), z.psi1.end(), 0.0);
  std::fill(z.psi2.begin(), z.psi2.end(), 0.0);
  for (int k = 0; k < 50; ++k) REQUIRE(ev0.step(z, ev0.dt()));
  for (std::size_t i = 0; i < z.rho.size(); ++i) {
    CHECK(z.psi1[i] == 0.0);
    CHECK(z.psi2[i] == 0.0);
  }
}

TEST_CASE("deviation from static converges at fourth order") {
  const auto sol = solve_profile(WarpedTarget(3, 0.02));
  double err[2];
  int k = 0;
  for (int M : {128, 256}) {
    const Evolver ev(sol, coarse(M));
    auto s = ev.static_state();
    const int steps = static_cast<int>(std::ceil(1.0 / ev.dt()));
    for (int i = 0; i < steps; ++i) ev.step(s, 1.0 / steps);
    const auto st = ev.static_state();
    const std::size_t upto = M / 8 + 1;  // rho <= 1
    err[k++] = std::max(sup_diff(s.psi1, st.psi1, upto), sup_diff(s.psi2, st.psi2, upto));
  }
  CHECK(err[0] / err[1] >= std::pow(2.0, 3.5));
}

TEST_CASE("linear growth of the gauge direction") {
  const auto sol = solve_profile(WarpedTarget(3, 0.0));
  auto cfg = coarse(512);
  cfg.growth_window[1] = 3.0;
  const Evolver ev(sol, cfg);
  const auto rep = ev.run(1.0 + 1e-4, {}, 3.0);
  CHECK_FALSE(rep.blowup);
  CHECK(rep.growth_exponent == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rep.a.front() == doctest::Approx(1e-4).epsilon(0.02));
}

TEST_CASE("unperturbed blowup time") {
  auto cfg = coarse(1024);
  cfg.tune_tol = 1e-13;
  const auto tune = tune_blowup_time(solve_profile(WarpedTarget(3, 0.0)), cfg);
  CHECK(std::abs(tune.T - 1.0) < 1e-8);
  CHECK(tune.T_linear == 1.0);
}

TEST_CASE("blowup time responds linearly to the perturbation") {
  const auto sol = solve_profile(WarpedTarget(3, 0.0));
  auto shift = [&](double A) {
    auto cfg = coarse(256);
    cfg.perturbation.shape = "gauge";
    cfg.perturbation.amplitude = A;
    return tune_blowup_time(sol, cfg).T - 1.0;
  };
  const double p = shift(1e-3), m = shift(-1e-3), p2 = shift(2e-3);
  CHECK(p * m < 0.0);
  CHECK(std::abs(p + m) < 0.05 * std::abs(p - m));
  CHECK(p2 / p == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("physical gradient plateaus at the profile slope") {
  for (int d : {3, 7}) {
    const Evolver ev(solve_profile(WarpedTarget(d, 0.0)), coarse(512));
    const auto diag = physical_diagnostics(ev.run(1.0, {}, 3.0));
    const double b = 2.0 / std::sqrt(d - 2.0);
    for (double v : diag.value) CHECK(v == doctest::Approx(b).epsilon(2e-6));
  }
}

TEST_CASE("tuned bump decays") {
  auto cfg = coarse(512);
  cfg.perturbation.shape = "bump";
  cfg.perturbation.amplitude = 1e-2;
  const auto sol = solve_profile(WarpedTarget(3, 0.02));
  const Evolver ev(sol, cfg);
  const auto tune = tune_blowup_time(ev);
  const auto rep = ev.run(tune.T, cfg.perturbation, 5.0);
  CHECK(std::abs(tune.T - 1.0) < 0.05);
  for (std::size_t k = 0; k < rep.orders.size(); ++k) {
    CHECK(rep.rates[k] > 0.2);
    CHECK(rep.rates[k] < 1.2);
  }
}

TEST_CASE("log slope") {
  std::vector<double> x, y;
  for (int i = 0; i <= 40; ++i) x.push_back(0.1 * i), y.push_back(3.0 * std::exp(-0.7 * x.back()));
  const auto [s, e] = log_slope(x, y, 1.0, 4.0);
  CHECK(s == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(e < 1e-12);
}
