// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <boost/math/quadrature/gauss.hpp>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wml/evolution.hpp"
#include "wml/geometry.hpp"
#include "wml/norms.hpp"
#include "wml/operators.hpp"
#include "wml/profile.hpp"
#include "wml/spectral.hpp"

using namespace wml;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

void report(int id, bool pass, const std::string& detail, double seconds, double budget) {
  const bool in_time = seconds <= budget;
  if (!(pass && in_time)) ++failures;
  std::printf("criterion %2d: %s  %s  [%.1fs / %.0fs]\n", id, pass && in_time ? "PASS" : "FAIL", detail.c_str(),
              seconds, budget);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// f0 = 2 atan(rho / s) and its first three derivatives, written out by hand.
struct Closed {
  double s;
  double f(double r) const { return 2.0 * std::atan(r / s); }
  double f1(double r) const { return 2.0 * s / (s * s + r * r); }
  double f2(double r) const { return -4.0 * s * r / std::pow(s * s + r * r, 2); }
  double f3(double r) const { return 4.0 * s * (3.0 * r * r - s * s) / std::pow(s * s + r * r, 3); }
  // u = f / rho = (2/s) A(x), A(x) = atan(x)/x, x = rho/s; power series of A below x = 1/2.
  std::array<double, 3> u(double r) const {
    const double x = r / s;
    double A = 0, A1 = 0, A2 = 0;
    if (x < 0.5) {
      for (int k = 60; k >= 0; --k) {
        const double c = (k % 2 ? -1.0 : 1.0) / (2 * k + 1);
        A += c * std::pow(x, 2 * k);
        if (k >= 1) A1 += c * 2 * k * std::pow(x, 2 * k - 1);
        if (k >= 1) A2 += c * 2 * k * (2 * k - 1) * std::pow(x, 2 * k - 2);
      }
    } else {
      A = std::atan(x) / x;
      A1 = (1.0 / (1.0 + x * x) - A) / x;
      A2 = (-2.0 * x / std::pow(1.0 + x * x, 2) - 2.0 * A1) / x;
    }
    return {2.0 / s * A, 2.0 / (s * s) * A1, 2.0 / (s * s * s) * A2};
  }
};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

const std::vector<double> kEpsGrid{0.0, 0.01, -0.01, 0.02, -0.02, 0.05, -0.05};

void criterion1() {
  Timer t;
  double worst_shoot = 0, worst_coll = 0;
  for (int d : {3, 4, 5, 7}) {
    const WarpedTarget tg(d, 0.0);
    const Closed c{std::sqrt(d - 2.0)};
    const auto shoot = solve_profile(tg);
    // Start collocation away from the answer: right limit at infinity, wrong scale.
    const auto coll = newton_collocation(tg, [&](double r) { return M_PI * r / (r + 1.5 * c.s); });
    for (double r : linspace(0.0, 50.0, 5001)) {
      worst_shoot = std::max(worst_shoot, std::abs(shoot.value(r) - c.f(r)));
      worst_coll = std::max(worst_coll, std::abs(coll.value(r) - c.f(r)));
    }
  }
  report(1, worst_shoot <= 1e-8 && worst_coll <= 1e-8,
         "sup|f-f0| shooting " + fmt("%.2e", worst_shoot) + ", collocation " + fmt("%.2e", worst_coll), t.seconds(),
         10);
}

void criterion2() {
  Timer t;
  double rf = 0, ru = 0, agree = 0;
  for (int d : {3, 4, 5, 7}) {
    const WarpedTarget tg(d, 0.0);
    const Closed c{std::sqrt(d - 2.0)};
    for (double r : linspace(0.01, 20.0, 1000)) {
      const double Rf = residual_f(tg, r, c.f(r), c.f1(r), c.f2(r));
      const auto [u, up, upp] = c.u(r);
      const double Ru = residual_u(tg, r, u, up, upp);
      rf = std::max(rf, std::abs(Rf));
      ru = std::max(ru, std::abs(Ru));
      agree = std::max(agree, std::abs(Rf - r * Ru));
    }
  }
  report(2, rf <= 1e-12 && ru <= 1e-12 && agree <= 1e-12,
         "max |R_f| " + fmt("%.2e", rf) + ", |R_u| " + fmt("%.2e", ru) + ", |R_f - rho R_u| " + fmt("%.2e", agree),
         t.seconds(), 1);
}

void criterion3() {
  Timer t;
  double worst = 0;
  const auto rho = linspace(0.0, 20.0, 2001);
  for (int d : {3, 5})
    for (double e : kEpsGrid) {
      const auto sol = solve_profile(WarpedTarget(d, e));
      const auto r = static_residual(sol, rho);
      for (std::size_t i = 0; i < rho.size(); ++i)
        worst = std::max({worst, std::abs(r.psi1.v[i]), std::abs(r.psi2.v[i])});
    }
  report(3, worst <= 1e-9, "max static residual " + fmt("%.2e", worst), t.seconds(), 30);
}

void criterion4() {
  Timer t;
  double lam = 0, vec = 0, g0 = 0, ode = 0;
  for (int d : {3, 5})
    for (double e : {0.0, 0.02, -0.05}) {
      const auto sol = solve_profile(WarpedTarget(d, e));
      SpectralConfig sc;
      sc.N = 128;
      const auto rep = analyze_spectrum(sol, sc);
      lam = std::max(lam, std::abs(rep.gauge - 1.0));
      const std::vector<double> rho(rep.rho.data(), rep.rho.data() + rep.rho.size());
      const auto g = gauge_mode(sol, rho);
      const int m = static_cast<int>(rho.size());
      double scale = 0;
      for (int j = 0; j < m; ++j) scale = std::max({scale, std::abs(g.psi1.v[j]), std::abs(g.psi2.v[j])});
      for (int j = 0; j < m; ++j)
        vec = std::max({vec, std::abs(rep.right[j] - g.psi1.v[j]) / scale,
                        std::abs(rep.right[m + j] - g.psi2.v[j]) / scale});
      if (e == 0.0) {
        const int n = d + 2;
        // first component against 1/(rho^2 + n - 4), both normalized at the origin
        for (int j = 0; j < m; ++j)
          g0 = std::max(g0, std::abs(rep.right[j] / rep.right[m - 1] -
                                     (n - 4.0) / (rho[j] * rho[j] + n - 4.0)));
      }
      ode = std::max(ode, verify_gauge_ode(sol));
    }
  report(4, lam <= 1e-6 && vec <= 1e-6 && g0 <= 1e-6 && ode <= 1e-8,
         "|lambda-1| " + fmt("%.2e", lam) + ", eigenvector vs gauge mode " + fmt("%.2e", vec) + ", vs g0 " +
             fmt("%.2e", g0) + ", gauge ODE residual " + fmt("%.2e", ode),
         t.seconds(), 60);
}

void criterion5() {
  Timer t;
  bool ok = true;
  double min_gap = 1e300, worst_change = 0, worst_spurious = -1e300;
  for (int d : {3, 5})
    for (double e : kEpsGrid) {
      const auto sol = solve_profile(WarpedTarget(d, e));
      double gaps[2];
      int idx = 0;
      for (int N : {128, 256}) {
        SpectralConfig sc;
        sc.N = N;
        const auto rep = analyze_spectrum(sol, sc);
        int above = 0;
        for (std::size_t k = 0; k < rep.eigenvalues.size(); ++k)
          if (rep.converged[k] && rep.eigenvalues[k].real() >= -rep.gap / 2) {
            ++above;
            ok = ok && std::abs(rep.eigenvalues[k] - 1.0) <= 1e-6;
          }
        ok = ok && above == 1 && rep.gap > 0;
        gaps[idx++] = rep.gap;
        min_gap = std::min(min_gap, rep.gap);
        worst_spurious = std::max(worst_spurious, rep.max_unconverged_re);
      }
      const double change = std::abs(gaps[1] - gaps[0]) / gaps[0];
      worst_change = std::max(worst_change, change);
      ok = ok && change <= 0.1;
    }
  report(5, ok,
         "min gap " + fmt("%.4f", min_gap) + ", max relative change N=128->256 " + fmt("%.2e", worst_change) +
             ", max Re of unconverged " + fmt("%.3f", worst_spurious),
         t.seconds(), 300);
}

void criterion6() {
  Timer t;
  const auto sol = solve_profile(WarpedTarget(3, 0.0));
  EvolutionConfig cfg;
  cfg.grid = 2048;
  cfg.R = 8.0;
  cfg.tau_max = 8.0;
  cfg.perturbation.shape = "bump";
  cfg.perturbation.amplitude = 1e-2;
  Evolver ev(sol, cfg);
  const auto tune = tune_blowup_time(ev);
  bool ok = true;
  std::string detail = "T* " + fmt("%.8f", tune.T);
  double worst_run = 0;
  for (double dT : {0.01, -0.01}) {
    Timer run;
    const auto rep = ev.run(tune.T + dT, cfg.perturbation, cfg.tau_max);
    worst_run = std::max(worst_run, run.seconds());
    ok = ok && std::abs(rep.growth_exponent - 1.0) <= 0.05 && run.seconds() <= 120;
    detail += fmt(dT > 0 ? ", T*+0.01 exponent %.4f" : ", T*-0.01 exponent %.4f", rep.growth_exponent);
    if (rep.blowup) detail += fmt(" (blowup at tau %.2f)", rep.blowup_tau);
  }
  detail += fmt(", slowest run %.1fs", worst_run);
  report(6, ok, detail, t.seconds(), 360);
}

void criterion7() {
  Timer t;
  bool ok = true;
  double worst_T = 0, min_rate = 1e300, worst_plateau = 0;
  for (double e : {0.0, 0.02}) {
    const auto sol = solve_profile(WarpedTarget(3, e));
    for (const char* shape : {"bump", "shell", "random"}) {
      EvolutionConfig cfg;
      cfg.grid = 1024;
      cfg.tau_max = 8.0;
      cfg.perturbation.shape = shape;
      cfg.perturbation.amplitude = 1e-2;
      Evolver ev(sol, cfg);
      const auto tune = tune_blowup_time(ev);
      const auto rep = ev.run(tune.T, cfg.perturbation, cfg.tau_max);
      const auto diag = physical_diagnostics(rep);
      worst_T = std::max(worst_T, std::abs(tune.T - 1.0));
      ok = ok && std::abs(tune.T - 1.0) <= 0.05 && !rep.blowup;
      for (double r : rep.rates) {
        min_rate = std::min(min_rate, r);
        ok = ok && r > 0;
      }
      for (std::size_t i = 0; i < rep.tau.size(); ++i)
        if (rep.tau[i] >= 5.0) worst_plateau = std::max(worst_plateau, std::abs(diag.value[i] / std::abs(sol.b) - 1.0));
    }
  }
  ok = ok && worst_plateau <= 0.01;
  report(7, ok,
         "max |T*-1| " + fmt("%.4f", worst_T) + ", min fitted rate " + fmt("%.4f", min_rate) +
             ", max plateau deviation for tau>=5 " + fmt("%.2e", worst_plateau),
         t.seconds(), 600);
}

void criterion8() {
  Timer t;
  double s1 = 0, s2 = 0, drift = 0, drift0 = 0;
  std::string failing;
  const auto rho = linspace(0.0, 100.0, 4001);
  for (int d : {3, 5})
    for (double e : kEpsGrid) {
      const auto sol = solve_profile(WarpedTarget(d, e));
      RadialField p1, p2;
      p1.rho = p2.rho = rho;
      for (double r : rho) {
        p1.v.push_back(sol.psi1(r));
        p2.v.push_back(sol.psi2(r));
      }
      s1 = std::max(s1, std::abs(decay_exponent(p1, 50.0, 100.0).exponent + 1.0));
      s2 = std::max(s2, std::abs(decay_exponent(p2, 50.0, 100.0).exponent + 2.0));
      const double q50 = 2500.0 * sol.psi2(50.0), q100 = 1e4 * sol.psi2(100.0);
      const double dr = std::abs(q100 - q50) / std::abs(q100);
      drift = std::max(drift, dr);
      if (e == 0.0) drift0 = std::max(drift0, dr);
      if (dr > 1e-3) failing += " (" + std::to_string(d) + "," + fmt("%+.2f", e) + ")";
    }
  report(8, s1 <= 0.05 && s2 <= 0.05 && drift <= 1e-3,
         "|slope+1| " + fmt("%.4f", s1) + ", |slope+2| " + fmt("%.4f", s2) + ", rho^2 f' drift " + fmt("%.2e", drift) +
             " (eps=0: " + fmt("%.2e", drift0) + ")" + (failing.empty() ? "" : "; drift above 1e-3 at (d,eps)" + failing),
         t.seconds(), 10);
}

void criterion9() {
  Timer t;
  auto quotient = [](double step, int nrho) {
    std::vector<ProfileSolution> sols;
    for (double e = -0.02; e <= 0.02 + 1e-12; e += step) sols.push_back(solve_profile(WarpedTarget(3, e)));
    return lipschitz_in_epsilon(sols, linspace(0.0, 50.0, nrho)).max[0];
  };
  const double coarse = quotient(0.01, 1001), fine = quotient(0.005, 4001);
  const double change = std::abs(fine - coarse) / coarse;
  report(9, std::isfinite(coarse) && std::isfinite(fine) && change <= 0.2,
         "quotient " + fmt("%.5f", coarse) + " -> " + fmt("%.5f", fine) + ", relative change " + fmt("%.2e", change),
         t.seconds(), 10);
}

void criterion10() {
  Timer t;
  using GL = boost::math::quadrature::gauss<double, 32>;
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const PerturbationBasis basis;
  double e1 = 0, e2 = 0, e3 = 0, jet = 0;
  for (int s = 0; s < 100; ++s) {
    const WarpedTarget tg(3, basis.eps0() * U(gen));
    const double a = 3.0 * U(gen), b = 2.0 * U(gen), c = 2.0 * U(gen);
    // Integrands use the exact sine-polynomial form; the left-hand sides use the Leibniz evaluation.
    const SinePoly& eta_poly = tg.eta_poly();
    auto e3p = [&](double y) { return eta_poly.eval(y, 3); };
    const double i1 = a * a * a * GL::integrate([&](double x) {
      return GL::integrate([&](double y) {
        return GL::integrate([&](double z) { return x * x * y * e3p(a * x * y * z); }, 0.0, 1.0);
      }, 0.0, 1.0);
    }, 0.0, 1.0);
    const double i2 = a * a * GL::integrate([&](double x) {
      return GL::integrate([&](double y) { return x * e3p(a * x * y); }, 0.0, 1.0);
    }, 0.0, 1.0);
    const double i3 = (c - b) * GL::integrate([&](double x) {
      const double p = b + x * (c - b);
      return GL::integrate([&](double y) {
        const double q = a + y * p;
        return GL::integrate([&](double z) { return p * q * e3p(z * q); }, 0.0, 1.0);
      }, 0.0, 1.0);
    }, 0.0, 1.0);
    const double l3 = tg.eta(a + c) - tg.eta(a + b) - tg.eta(a, 1) * (c - b);
    e1 = std::max(e1, std::abs(tg.eta(a) - i1));
    e2 = std::max(e2, std::abs(tg.eta(a, 1) - i2));
    e3 = std::max(e3, std::abs(l3 - i3));
    for (int k = 0; k <= 2; ++k) jet = std::max(jet, std::abs(tg.eta(0.0, k)));
  }
  report(10, e1 <= 1e-10 && e2 <= 1e-10 && e3 <= 1e-10 && jet <= 1e-14,
         "identity errors " + fmt("%.2e", e1) + ", " + fmt("%.2e", e2) + ", " + fmt("%.2e", e3) + "; zero jet " +
             fmt("%.1e", jet),
         t.seconds(), 5);
}

void criterion11() {
  Timer t;
  const auto sol = solve_profile(WarpedTarget(3, 0.02));
  const double h = 1.0 / 256.0;
  auto make = [&](double R) {
    EvolutionConfig cfg;
    cfg.R = R;
    cfg.grid = static_cast<int>(std::lround(R / h));
    cfg.dt = cfg.cfl * h / (12.0 + 1.0);  // the stricter of the two CFL limits, shared
    cfg.tau_max = 8.0;
    cfg.perturbation.shape = "bump";
    cfg.perturbation.amplitude = 1e-3;
    return cfg;
  };
  const auto c8 = make(8.0), c12 = make(12.0);
  Evolver e8(sol, c8), e12(sol, c12);
  // Linear blowup-time prediction keeps the unstable component small up to tau 8.
  const double T = 1.0 - e8.unstable_coefficient(e8.initial_data(1.0, c8.perturbation));
  auto s8 = e8.initial_data(T, c8.perturbation), s12 = e12.initial_data(T, c12.perturbation);
  const int inner = static_cast<int>(std::lround(1.0 / h));
  const int steps = static_cast<int>(std::ceil(c8.tau_max / c8.dt - 1e-9));
  const double dt = c8.tau_max / steps;
  double diff = 0;
  bool finite = true;
  for (int k = 1; k <= steps; ++k) {
    const bool ok8 = e8.step(s8, dt), ok12 = e12.step(s12, dt);
    finite = finite && ok8 && ok12;
    if (k % 1000 == 0 || k == steps)
      for (int i = 0; i <= inner; ++i)
        diff = std::max({diff, std::abs(s8.psi1[i] - s12.psi1[i]), std::abs(s8.psi2[i] - s12.psi2[i])});
  }
  report(11, finite && diff <= 1e-12, "max |difference| on rho <= 1 up to tau 8: " + fmt("%.2e", diff) + (finite ? "" : " (run diverged)"), t.seconds(),
         240);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::function<void()>> all{criterion1, criterion2, criterion3, criterion4,  criterion5, criterion6,
                                         criterion7, criterion8, criterion9, criterion10, criterion11};
  // Optional arguments select criteria by number.
  std::vector<int> pick;
  for (int i = 1; i < argc; ++i) pick.push_back(std::atoi(argv[i]));
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (!pick.empty() && std::find(pick.begin(), pick.end(), static_cast<int>(k + 1)) == pick.end()) continue;
    try {
      all[k]();
    } catch (const std::exception& e) {
      report(static_cast<int>(k + 1), false, std::string("exception: ") + e.what(), 0.0, 1.0);
    }
  }
  std::printf("%s\n", failures == 0 ? "all criteria passed" : (std::to_string(failures) + " criteria failed").c_str());
  return failures == 0 ? 0 : 1;
}
