#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wml/profile.hpp"
#include "wml/spectral.hpp"

namespace wml {

// Shapes: none, bump (first component), bump2 (second component), shell, gauge, random.
struct Perturbation {
  std::string shape = "none";
  double amplitude = 0.0;
  double support = 2.0;  // R0: v vanishes for rho >= R0
  std::uint64_t seed = 1;
};

struct EvolutionConfig {
  double R = 8.0;
  int grid = 2048;        // number of intervals on [0, R]
  double cfl = 0.4;       // dtau = cfl * h / (R + 1)
  double dt = 0.0;        // explicit step; overrides cfl when positive
  double tau_max = 8.0;
  double T = 1.0;
  double delta = 0.05;    // T search interval [1 - delta, 1 + delta]
  double rho_s = 3.0;     // fourth-order centered stencils for rho <= rho_s
  double dissipation = 1.0;
  double record_interval = 0.05;
  double norm_radius = 2.0;
  std::vector<int> norm_orders{0, 1, 2};
  double blowup_threshold = 1e6;
  int spectral_N = 64;
  double fit_start = 1.0;           // decay fits use tau >= fit_start
  double growth_window[2] = {0.0, 2.0};
  double tune_window[2] = {4.0, 5.0};
  double tune_tol = 1e-12;
  int tune_max_iter = 12;
  Perturbation perturbation;

  void validate() const;
};

struct SimilarityState {
  double tau = 0.0;
  double h = 0.0;
  std::vector<double> rho, psi1, psi2;
};

struct DecayReport {
  double T = 1.0;
  std::vector<double> tau, a, origin;       // a = <l, Phi>, origin = psi1(tau, 0)
  std::vector<int> orders;
  std::vector<std::vector<double>> norms;   // norms[k][i]: order orders[k] at tau[i]
  std::vector<double> sup;                  // max |Phi| over the norm ball
  std::vector<double> rates, rate_errors;   // fitted decay rates per order
  std::vector<bool> monotone;               // nonincreasing after the fit start
  double growth_exponent = 0.0;
  double a_infinity = 0.0;
  double b = 0.0;
  bool blowup = false;
  double blowup_tau = 0.0;
};

struct DiagnosticSeries {
  std::vector<double> t, value;  // value = (T - t) |d_r u(t, 0)|
};

class Evolver {
 public:
  Evolver(const ProfileSolution& profile, const EvolutionConfig& cfg);

  const EvolutionConfig& config() const { return cfg_; }
  double dt() const { return dt_; }
  double h() const { return h_; }
  const std::vector<double>& rho() const { return rho_; }
  const Projector& projector() const { return proj_; }

  SimilarityState static_state() const;
  SimilarityState initial_data(double T, const Perturbation& v) const;
  // Perturbation samples (v1, v2) at rho.
  std::array<double, 2> perturbation_at(const Perturbation& v, double rho) const;

  void rhs(const std::vector<double>& p1, const std::vector<double>& p2, std::vector<double>& d1,
           std::vector<double>& d2) const;
  // One RK4 step; false when the state is no longer finite or exceeds the blowup threshold.
  bool step(SimilarityState& s, double dt) const;

  double unstable_coefficient(const SimilarityState& s) const;
  DecayReport run(double T, const Perturbation& v, double tau_max) const;

 private:
  ProfileSolution profile_;
  EvolutionConfig cfg_;
  int M_ = 0, ms_ = 0;
  double h_ = 0.0, dt_ = 0.0;
  std::vector<double> rho_, static1_, static2_;
  Projector proj_;
  SpectrumReport spectrum_;
  std::vector<std::array<int, 6>> interp_idx_;
  std::vector<std::array<double, 6>> interp_w_;
  mutable std::vector<double> k1a_, k1b_, k2a_, k2b_, k3a_, k3b_, k4a_, k4b_, ta_, tb_, b_;
};

DecayReport evolve(const ProfileSolution& profile, const EvolutionConfig& cfg);

struct TuneResult {
  double T = 1.0;
  double T_linear = 1.0;
  double a_infinity = 0.0;
  int iterations = 0;
  std::vector<std::pair<double, double>> history;  // (T, a_infinity)
};

TuneResult tune_blowup_time(const ProfileSolution& profile, const EvolutionConfig& cfg);
TuneResult tune_blowup_time(const Evolver& ev);

DiagnosticSeries physical_diagnostics(const DecayReport& report);

// Least-squares slope of log|y| against x on [x0, x1]; entries with |y| <= floor are skipped.
std::pair<double, double> log_slope(const std::vector<double>& x, const std::vector<double>& y, double x0,
                                    double x1, double floor = 0.0);

}  // namespace wml
