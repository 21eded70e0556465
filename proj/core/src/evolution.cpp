#include "wml/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wml/errors.hpp"
#include "wml/norms.hpp"
#include "wml/operators.hpp"

namespace wml {

namespace {

// Smooth bump on q in [0, 1): exp(1 - 1/(1 - q)), equal to 1 at q = 0.
double bump(double q) { return q >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - q)); }

// Uniform double in [0, 1) from the top 53 bits; independent of the standard library's distributions.
double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace

void EvolutionConfig::validate() const {
  if (!(R > 1.0)) throw ValidationError("evolution radius R must exceed 1");
  if (grid < 64) throw ValidationError("evolution grid must have at least 64 intervals");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ValidationError("cfl must lie in (0, 1]");
  const double h = R / grid;
  if (dt > cfl * h / (R + 1.0) * (1.0 + 1e-12)) throw ValidationError("explicit dt violates the CFL bound");
  if (!(tau_max > 0.0)) throw ValidationError("tau_max must be positive");
  if (!(delta > 0.0 && delta < 0.5)) throw ValidationError("delta must lie in (0, 0.5)");
  if (std::abs(T - 1.0) > delta) throw ValidationError("T outside [1 - delta, 1 + delta]");
  if (!(rho_s >= 1.0 && rho_s + 4 * h < R)) throw ValidationError("rho_s must satisfy 1 <= rho_s < R");
  if (!(norm_radius > 0.0 && norm_radius <= R)) throw ValidationError("norm_radius must lie in (0, R]");
  if (spectral_N < 16 || spectral_N % 2) throw ValidationError("spectral_N must be even and at least 16");
  if (2.0 + 4 * h > R) throw ValidationError("grid must cover the projection domain rho <= 2");
  for (int j : norm_orders)
    if (j < 0 || j > 4) throw ValidationError("norm orders must lie in [0, 4]");
  if (!(perturbation.support > 0.0 && perturbation.support < R))
    throw ValidationError("perturbation support must lie in (0, R)");
  static const char* shapes[] = {"none", "bump", "bump2", "shell", "gauge", "random"};
  if (std::none_of(std::begin(shapes), std::end(shapes), [&](const char* s) { return perturbation.shape == s; }))
    throw ValidationError("unknown perturbation shape: " + perturbation.shape);
}

Evolver::Evolver(const ProfileSolution& profile, const EvolutionConfig& cfg) : profile_(profile), cfg_(cfg) {
  cfg_.validate();
  M_ = cfg_.grid;
  h_ = cfg_.R / M_;
  const double dt0 = cfg_.dt > 0.0 ? cfg_.dt : cfg_.cfl * h_ / (cfg_.R + 1.0);
  dt_ = dt0;
  ms_ = static_cast<int>(std::floor(cfg_.rho_s / h_ + 1e-9));
  rho_.resize(M_ + 1);
  static1_.resize(M_ + 1);
  static2_.resize(M_ + 1);
  for (int i = 0; i <= M_; ++i) {
    rho_[i] = i * h_;
    static1_[i] = profile_.psi1(rho_[i]);
    static2_[i] = profile_.psi2(rho_[i]);
  }
  SpectralConfig sc;
  sc.N = cfg_.spectral_N;
  spectrum_ = analyze_spectrum(profile_, sc);
  proj_ = unstable_projection(spectrum_);
  // Six-point Lagrange stencils from the uniform grid onto the spectral nodes.
  for (Eigen::Index j = 0; j < spectrum_.rho.size(); ++j) {
    const double r = spectrum_.rho[j];
    int i0 = static_cast<int>(std::floor(r / h_)) - 2;
    i0 = std::min(i0, M_ - 5);
    std::array<int, 6> idx;
    std::array<double, 6> w;
    for (int k = 0; k < 6; ++k) {
      idx[k] = i0 + k;
      double num = 1.0, den = 1.0;
      for (int l = 0; l < 6; ++l) {
        if (l == k) continue;
        num *= r - (i0 + l) * h_;
        den *= (k - l) * h_;
      }
      w[k] = num / den;
    }
    interp_idx_.push_back(idx);
    interp_w_.push_back(w);
  }
  for (auto* v : {&k1a_, &k1b_, &k2a_, &k2b_, &k3a_, &k3b_, &k4a_, &k4b_, &ta_, &tb_, &b_}) v->resize(M_ + 1);
}

SimilarityState Evolver::static_state() const {
  SimilarityState s;
  s.h = h_;
  s.rho = rho_;
  s.psi1 = static1_;
  s.psi2 = static2_;
  return s;
}

std::array<double, 2> Evolver::perturbation_at(const Perturbation& v, double r) const {
  const double R0 = v.support;
  const double A = v.amplitude;
  if (v.shape == "none" || A == 0.0 || r >= R0) return {0.0, 0.0};
  const double q = (r / R0) * (r / R0);
  if (v.shape == "bump") return {A * bump(q), 0.0};
  if (v.shape == "bump2") return {0.0, A * bump(q)};
  if (v.shape == "shell") {
    const double c = 0.5 * R0;
    const double z = (r - c) / c;
    return {A * bump(z * z), -0.5 * A * bump(z * z)};
  }
  if (v.shape == "gauge") {
    const auto d = profile_.eval(r);
    return {A * d.f1 * bump(q), A * (2.0 * d.f1 + r * d.f2) * bump(q)};
  }
  // random: four bumps with seeded weights and widths in each component
  std::mt19937_64 g(v.seed);
  double out[2] = {0.0, 0.0};
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < 4; ++k) {
      const double weight = 2.0 * unit(g) - 1.0;
      const double width = R0 * (0.25 + 0.75 * unit(g));
      const double z = r / width;
      out[c] += A * weight * bump(z * z) / 2.0;
    }
  return {out[0], out[1]};
}

SimilarityState Evolver::initial_data(double T, const Perturbation& v) const {
  if (std::abs(T - 1.0) > cfg_.delta * (1.0 + 1e-12)) throw ValidationError("T outside [1 - delta, 1 + delta]");
  if (!(v.support > 0.0 && v.support < cfg_.R)) throw ValidationError("perturbation support must lie in (0, R)");
  SimilarityState s = static_state();
  for (int i = 0; i <= M_; ++i) {
    const double r = T * rho_[i];
    const auto p = perturbation_at(v, r);
    s.psi1[i] = T * (p[0] + profile_.psi1(r));
    s.psi2[i] = T * T * (p[1] + profile_.psi2(r));
  }
  return s;
}

void Evolver::rhs(const std::vector<double>& p1, const std::vector<double>& p2, std::vector<double>& d1,
                  std::vector<double>& d2) const {
  const WarpedTarget& t = profile_.target;
  const int n = t.n();
  const double h = h_;
  const double sig = cfg_.dissipation / (64.0 * h);
  auto at = [](const std::vector<double>& p, int j) { return p[j < 0 ? -j : j]; };
  // Interior: fourth-order centered differences with even ghosts, sixth-order Kreiss-Oliger dissipation.
  for (int i = 0; i <= ms_; ++i) {
    const double a2 = at(p1, i - 2), a1 = at(p1, i - 1), a0 = p1[i], b1 = p1[i + 1], b2 = p1[i + 2];
    const double D1 = (a2 - 8.0 * a1 + 8.0 * b1 - b2) / (12.0 * h);
    const double D2 = (-a2 + 16.0 * a1 - 30.0 * a0 + 16.0 * b1 - b2) / (12.0 * h * h);
    const double Q1 = (at(p2, i - 2) - 8.0 * at(p2, i - 1) + 8.0 * p2[i + 1] - p2[i + 2]) / (12.0 * h);
    const double r = rho_[i];
    const double lap = i == 0 ? n * D2 : D2 + (n - 1.0) / r * D1;
    const double ko1 = at(p1, i - 3) - 6.0 * a2 + 15.0 * a1 - 20.0 * a0 + 15.0 * b1 - 6.0 * b2 + p1[i + 3];
    const double ko2 = at(p2, i - 3) - 6.0 * at(p2, i - 2) + 15.0 * at(p2, i - 1) - 20.0 * p2[i] +
                       15.0 * p2[i + 1] - 6.0 * p2[i + 2] + p2[i + 3];
    d1[i] = -r * D1 - a0 + p2[i] + sig * ko1;
    d2[i] = lap - r * Q1 - 2.0 * p2[i] + nonlinearity_at(t, r, a0) + sig * ko2;
  }
  // Exterior: both characteristic speeds are positive, second-order backward differences.
  for (int i = std::max(2, ms_ - 1); i <= M_; ++i) b_[i] = (3.0 * p1[i] - 4.0 * p1[i - 1] + p1[i - 2]) / (2.0 * h);
  for (int i = ms_ + 1; i <= M_; ++i) {
    const double D1 = b_[i];
    const double D2 = (3.0 * b_[i] - 4.0 * b_[i - 1] + b_[i - 2]) / (2.0 * h);
    const double Q1 = (3.0 * p2[i] - 4.0 * p2[i - 1] + p2[i - 2]) / (2.0 * h);
    const double r = rho_[i];
    d1[i] = -r * D1 - p1[i] + p2[i];
    d2[i] = D2 + (n - 1.0) / r * D1 - r * Q1 - 2.0 * p2[i] + nonlinearity_at(t, r, p1[i]);
  }
}

bool Evolver::step(SimilarityState& s, double dt) const {
  const int m = M_ + 1;
  rhs(s.psi1, s.psi2, k1a_, k1b_);
  for (int i = 0; i < m; ++i) ta_[i] = s.psi1[i] + 0.5 * dt * k1a_[i], tb_[i] = s.psi2[i] + 0.5 * dt * k1b_[i];
  rhs(ta_, tb_, k2a_, k2b_);
  for (int i = 0; i < m; ++i) ta_[i] = s.psi1[i] + 0.5 * dt * k2a_[i], tb_[i] = s.psi2[i] + 0.5 * dt * k2b_[i];
  rhs(ta_, tb_, k3a_, k3b_);
  for (int i = 0; i < m; ++i) ta_[i] = s.psi1[i] + dt * k3a_[i], tb_[i] = s.psi2[i] + dt * k3b_[i];
  rhs(ta_, tb_, k4a_, k4b_);
  bool ok = true;
  const double cap = cfg_.blowup_threshold;
  for (int i = 0; i < m; ++i) {
    s.psi1[i] += dt / 6.0 * (k1a_[i] + 2.0 * k2a_[i] + 2.0 * k3a_[i] + k4a_[i]);
    s.psi2[i] += dt / 6.0 * (k1b_[i] + 2.0 * k2b_[i] + 2.0 * k3b_[i] + k4b_[i]);
    if (!(std::abs(s.psi1[i]) <= cap && std::abs(s.psi2[i]) <= cap)) ok = false;
  }
  s.tau += dt;
  return ok;
}

double Evolver::unstable_coefficient(const SimilarityState& s) const {
  const Eigen::Index m = spectrum_.rho.size();
  Eigen::VectorXd phi(2 * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double v1 = 0.0, v2 = 0.0;
    for (int k = 0; k < 6; ++k) {
      const int i = std::abs(interp_idx_[j][k]);
      v1 += interp_w_[j][k] * (s.psi1[i] - static1_[i]);
      v2 += interp_w_[j][k] * (s.psi2[i] - static2_[i]);
    }
    phi[j] = v1;
    phi[m + j] = v2;
  }
  return proj_.coefficient(phi);
}

DecayReport Evolver::run(double T, const Perturbation& v, double tau_max) const {
  DecayReport rep;
  rep.T = T;
  rep.b = profile_.b;
  rep.orders = cfg_.norm_orders;
  rep.norms.assign(rep.orders.size(), {});
  const int steps = static_cast<int>(std::ceil(tau_max / dt_ - 1e-9));
  const double dt = tau_max / steps;
  const int stride = std::max(1, static_cast<int>(std::lround(cfg_.record_interval / dt)));
  const int mn = std::min(M_, static_cast<int>(std::floor(cfg_.norm_radius / h_ + 1e-9)));
  const int n = profile_.target.n();
  RadialField phi1;
  phi1.rho.assign(rho_.begin(), rho_.begin() + mn + 1);
  phi1.v.resize(mn + 1);
  auto record = [&](const SimilarityState& s) {
    rep.tau.push_back(s.tau);
    rep.a.push_back(unstable_coefficient(s));
    rep.origin.push_back(s.psi1[0]);
    double sup = 0.0;
    for (int i = 0; i <= mn; ++i) {
      phi1.v[i] = s.psi1[i] - static1_[i];
      sup = std::max({sup, std::abs(phi1.v[i]), std::abs(s.psi2[i] - static2_[i])});
    }
    rep.sup.push_back(sup);
    for (std::size_t k = 0; k < rep.orders.size(); ++k)
      rep.norms[k].push_back(sobolev_seminorm(phi1, rep.orders[k], n).value);
  };
  SimilarityState s = initial_data(T, v);
  record(s);
  for (int k = 1; k <= steps; ++k) {
    const double before = s.tau;
    if (!step(s, dt)) {
      rep.blowup = true;
      rep.blowup_tau = before;
      break;
    }
    s.tau = k * dt;
    if (k % stride == 0 || k == steps) record(s);
  }
  const double t_end = rep.tau.back();
  for (std::size_t k = 0; k < rep.orders.size(); ++k) {
    double rate = 0.0, err = 0.0;
    if (t_end > cfg_.fit_start) {
      const auto fit = log_slope(rep.tau, rep.norms[k], cfg_.fit_start, t_end, 1e-300);
      rate = -fit.first;
      err = fit.second;
    }
    rep.rates.push_back(rate);
    rep.rate_errors.push_back(err);
    bool mono = true;
    for (std::size_t i = 1; i < rep.tau.size(); ++i)
      if (rep.tau[i - 1] >= cfg_.fit_start && rep.norms[k][i] > rep.norms[k][i - 1]) mono = false;
    rep.monotone.push_back(mono);
  }
  const double g0 = cfg_.growth_window[0], g1 = std::min(cfg_.growth_window[1], t_end);
  if (g1 > g0) rep.growth_exponent = log_slope(rep.tau, rep.a, g0, g1, 1e-300).first;
  // a(tau) e^{-tau} settles once the stable part and the quadratic corrections have decayed.
  const double w0 = cfg_.tune_window[0], w1 = std::min(cfg_.tune_window[1], t_end);
  double acc = 0.0;
  int cnt = 0;
  for (std::size_t i = 0; i < rep.tau.size(); ++i)
    if (rep.tau[i] >= w0 - 1e-12 && rep.tau[i] <= w1 + 1e-12) acc += rep.a[i] * std::exp(-rep.tau[i]), ++cnt;
  rep.a_infinity = cnt ? acc / cnt : rep.a.back() * std::exp(-rep.tau.back());
  return rep;
}

DecayReport evolve(const ProfileSolution& profile, const EvolutionConfig& cfg) {
  Evolver ev(profile, cfg);
  return ev.run(cfg.T, cfg.perturbation, cfg.tau_max);
}

TuneResult tune_blowup_time(const ProfileSolution& profile, const EvolutionConfig& cfg) {
  Evolver ev(profile, cfg);
  return tune_blowup_time(ev);
}

TuneResult tune_blowup_time(const Evolver& ev) {
  const EvolutionConfig& cfg = ev.config();
  const Perturbation& v = cfg.perturbation;
  TuneResult out;
  const double lo = 1.0 - cfg.delta, hi = 1.0 + cfg.delta;
  const double horizon = cfg.tune_window[1];
  auto measure = [&](double T) {
    const double a = ev.run(T, v, horizon).a_infinity;
    out.history.emplace_back(T, a);
    return a;
  };
  // Linear prediction: Phi(0) = v + (T - 1) g + O(|T - 1|^2 + |v| |T - 1|), and <l, g> = 1.
  const SimilarityState zero = ev.static_state();
  SimilarityState pert = ev.initial_data(1.0, v);
  pert.tau = zero.tau;
  const double av = ev.unstable_coefficient(pert);
  out.T_linear = std::clamp(1.0 - av, lo, hi);
  double T0 = out.T_linear, a0 = measure(T0);
  out.T = T0;
  out.a_infinity = a0;
  if (std::abs(a0) <= cfg.tune_tol) return out;
  double T1 = std::clamp(T0 + (a0 > 0 ? -1e-4 : 1e-4), lo, hi), a1 = measure(T1);
  for (int it = 0; it < cfg.tune_max_iter; ++it) {
    out.iterations = it + 1;
    if (std::abs(a1) < std::abs(a0)) out.T = T1, out.a_infinity = a1;
    else out.T = T0, out.a_infinity = a0;
    if (std::abs(out.a_infinity) <= cfg.tune_tol || std::abs(T1 - T0) < 1e-14) return out;
    if (a1 == a0) break;
    const double T2 = T1 - a1 * (T1 - T0) / (a1 - a0);
    if (T2 < lo || T2 > hi) {
      const double alo = measure(lo), ahi = measure(hi);
      if ((alo > 0) == (ahi > 0))
        throw NonConvergence("no sign change of the unstable amplitude on [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
      throw NonConvergence("secant step left the T interval");
    }
    T0 = T1, a0 = a1;
    T1 = T2, a1 = measure(T2);
  }
  if (std::abs(a1) < std::abs(out.a_infinity)) out.T = T1, out.a_infinity = a1;
  return out;
}

DiagnosticSeries physical_diagnostics(const DecayReport& rep) {
  DiagnosticSeries d;
  for (std::size_t i = 0; i < rep.tau.size(); ++i) {
    const double t = rep.T * (1.0 - std::exp(-rep.tau[i]));
    // d_r u(t, 0) = psi1(tau, 0) / (T - t)
    const double grad = rep.origin[i] / (rep.T - t);
    d.t.push_back(t);
    d.value.push_back((rep.T - t) * std::abs(grad));
  }
  return d;
}

std::pair<double, double> log_slope(const std::vector<double>& x, const std::vector<double>& y, double x0,
                                    double x1, double floor) {
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] >= x0 - 1e-12 && x[i] <= x1 + 1e-12 && std::abs(y[i]) > floor) {
      X.push_back(x[i]);
      Y.push_back(std::log(std::abs(y[i])));
    }
  if (X.size() < 3) return {0.0, 0.0};
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < X.size(); ++i) mx += X[i], my += Y[i];
  mx /= X.size();
  my /= Y.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) sxx += (X[i] - mx) * (X[i] - mx), sxy += (X[i] - mx) * (Y[i] - my);
  const double slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double e = Y[i] - my - slope * (X[i] - mx);
    ss += e * e;
  }
  return {slope, std::sqrt(ss / (X.size() - 2) / sxx)};
}

}  // namespace wml
