#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <future>
#include <iostream>
#include <sstream>

#include "wml/config.hpp"
#include "wml/errors.hpp"
#include "wml/evolution.hpp"
#include "wml/io.hpp"
#include "wml/profile.hpp"
#include "wml/spectral.hpp"

using namespace wml;

namespace {

constexpr int kThresholdFailed = 1;
constexpr int kNonConvergence = 2;
constexpr int kValidation = 3;

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.6g", eps);
  return buf;
}

RunStamp stamp(const ExperimentConfig& c) { return {c.hash(), code_version(), c.tolerances_json()}; }

ProfileSolution solve(const ExperimentConfig& c, double eps) {
  const WarpedTarget t = c.target(eps);
  if (c.method == "collocation") {
    const double s = std::sqrt(c.d - 2.0);
    return newton_collocation(t, [s](double r) { return 2.0 * std::atan(r / s); }, c.collocation);
  }
  return solve_profile(t, c.profile);
}

// Runs job(i) for i in [0, count) on up to `workers` threads; results keep index order.
template <class F>
auto fan_out(int count, int workers, F job) {
  using R = decltype(job(0));
  std::vector<R> out;
  out.reserve(count);
  for (int start = 0; start < count; start += workers) {
    std::vector<std::future<R>> batch;
    for (int i = start; i < std::min(count, start + workers); ++i)
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, job, i));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

std::vector<double> csv_grid(double R) {
  std::vector<double> rho;
  for (int i = 0; i <= 1000; ++i) rho.push_back(R * i / 1000.0);
  return rho;
}

int cmd_profile(const ExperimentConfig& c) {
  const auto st = stamp(c);
  const auto sols = fan_out(static_cast<int>(c.epsilon.size()), c.workers, [&](int i) { return solve(c, c.epsilon[i]); });
  std::ostringstream summary;
  summary << "epsilon,method,b,a,c1,ctilde1,residual_norm\n";
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const auto& s = sols[i];
    const std::string base = c.output + "/profile_d" + std::to_string(c.d) + "_eps" + eps_tag(c.epsilon[i]);
    write_file(base + ".json", profile_to_json(s, st));
    std::ostringstream csv;
    write_profile_csv(csv, s, csv_grid(std::min(50.0, s.R_max)));
    write_file(base + ".csv", csv.str());
    summary << fmt_double(c.epsilon[i]) << ',' << s.method << ',' << fmt_double(s.b) << ',' << fmt_double(s.a) << ','
            << fmt_double(s.c1) << ',' << fmt_double(s.ctilde1) << ',' << fmt_double(s.residual_norm) << '\n';
    std::cout << "eps " << eps_tag(c.epsilon[i]) << "  b " << fmt_double(s.b) << "  residual "
              << fmt_double(s.residual_norm) << '\n';
  }
  write_file(c.output + "/profile_summary.csv", summary.str());
  if (sols.size() > 1) {
    std::vector<double> rho;
    for (int i = 0; i <= 2000; ++i) rho.push_back(10.0 * i / 2000.0);
    const auto lip = lipschitz_in_epsilon(sols, rho);
    write_file(c.output + "/lipschitz.json", lipschitz_to_json(lip, st));
    std::cout << "lipschitz max " << fmt_double(lip.max[0]) << ' ' << fmt_double(lip.max[1]) << ' '
              << fmt_double(lip.max[2]) << '\n';
  }
  return 0;
}

int cmd_spectrum(const ExperimentConfig& c, const std::string& profile_path) {
  std::vector<std::pair<double, ProfileSolution>> profiles;
  if (!profile_path.empty()) {
    auto p = load_profile(profile_path);
    profiles.emplace_back(p.target.epsilon(), std::move(p));
  } else {
    for (double e : c.epsilon) profiles.emplace_back(e, solve(c, e));
  }
  std::vector<std::pair<int, int>> jobs;  // (profile, N)
  for (std::size_t i = 0; i < profiles.size(); ++i)
    for (int N : c.spectral_N) jobs.emplace_back(static_cast<int>(i), N);
  auto runs = fan_out(static_cast<int>(jobs.size()), c.workers, [&](int k) {
    SpectralConfig sc;
    sc.N = jobs[k].second;
    sc.x_max = c.x_max;
    sc.drift_tol = c.drift_tol;
    return SpectrumRun{profiles[jobs[k].first].first, analyze_spectrum(profiles[jobs[k].first].second, sc)};
  });
  write_file(c.output + "/spectrum.json", spectrum_to_json(runs, stamp(c)));
  std::ostringstream csv;
  write_eigenvalues_csv(csv, runs);
  write_file(c.output + "/eigenvalues.csv", csv.str());
  bool ok = true;
  for (const auto& r : runs) {
    const double err = std::abs(r.report.gauge - 1.0);
    std::cout << "eps " << eps_tag(r.epsilon) << "  N " << r.report.N << "  |lambda-1| " << fmt_double(err)
              << "  gap " << fmt_double(r.report.gap) << '\n';
    ok = ok && err <= 1e-6 && r.report.gap > c.omega_threshold;
  }
  return ok ? 0 : kThresholdFailed;
}

struct EvolveResult {
  DecayReport report;
  TuneResult tune;
  bool tuned = false;
};

EvolveResult run_evolution(const ExperimentConfig& c, const ProfileSolution& sol) {
  Evolver ev(sol, c.evolution);
  EvolveResult r;
  double T = c.evolution.T;
  if (c.tune) {
    r.tune = tune_blowup_time(ev);
    r.tuned = true;
    T = r.tune.T;
  }
  r.report = ev.run(T, c.evolution.perturbation, c.evolution.tau_max);
  return r;
}

// Without a perturbation there is nothing to decay; the tuned time must then reproduce T = 1.
bool decay_ok(const ExperimentConfig& c, const DecayReport& rep, bool tuned) {
  if (rep.blowup) return false;
  const auto& v = c.evolution.perturbation;
  if (v.shape == "none" || v.amplitude == 0.0) return !tuned || std::abs(rep.T - 1.0) <= 1e-8;
  for (double r : rep.rates)
    if (!(r > 0.0)) return false;
  return true;
}

int cmd_evolve(const ExperimentConfig& c) {
  const double eps = c.epsilon.front();
  const auto sol = solve(c, eps);
  const auto r = run_evolution(c, sol);
  const std::string base = c.output + "/decay_d" + std::to_string(c.d) + "_eps" + eps_tag(eps);
  std::ostringstream csv;
  write_decay_csv(csv, r.report);
  write_file(base + ".csv", csv.str());
  write_file(base + ".json", decay_to_json(r.report, r.tuned ? &r.tune : nullptr, stamp(c)));
  std::cout << "T " << fmt_double(r.report.T) << "  blowup " << (r.report.blowup ? "yes" : "no");
  for (std::size_t k = 0; k < r.report.orders.size(); ++k)
    std::cout << "  rate" << r.report.orders[k] << ' ' << fmt_double(r.report.rates[k]);
  std::cout << '\n';
  return decay_ok(c, r.report, r.tuned) ? 0 : kThresholdFailed;
}

int cmd_sweep(const ExperimentConfig& c, bool with_evolution) {
  struct Row {
    ProfileSolution sol;
    SpectrumReport spec;
    EvolveResult evo;
  };
  const auto rows = fan_out(static_cast<int>(c.epsilon.size()), c.workers, [&](int i) {
    Row row;
    row.sol = solve(c, c.epsilon[i]);
    SpectralConfig sc;
    sc.N = c.spectral_N.back();
    sc.x_max = c.x_max;
    sc.drift_tol = c.drift_tol;
    row.spec = analyze_spectrum(row.sol, sc);
    if (with_evolution) row.evo = run_evolution(c, row.sol);
    return row;
  });
  std::ostringstream csv;
  csv << "epsilon,b,a,c1,ctilde1,residual_norm,gauge_error,gap";
  if (with_evolution) {
    csv << ",T_star,blowup";
    for (int j : c.evolution.norm_orders) csv << ",rate_" << j;
  }
  csv << '\n';
  bool ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double gerr = std::abs(r.spec.gauge - 1.0);
    csv << fmt_double(c.epsilon[i]) << ',' << fmt_double(r.sol.b) << ',' << fmt_double(r.sol.a) << ','
        << fmt_double(r.sol.c1) << ',' << fmt_double(r.sol.ctilde1) << ',' << fmt_double(r.sol.residual_norm) << ','
        << fmt_double(gerr) << ',' << fmt_double(r.spec.gap);
    ok = ok && gerr <= 1e-6 && r.spec.gap > c.omega_threshold;
    if (with_evolution) {
      csv << ',' << fmt_double(r.evo.report.T) << ',' << (r.evo.report.blowup ? 1 : 0);
      for (double rate : r.evo.report.rates) csv << ',' << fmt_double(rate);
      ok = ok && decay_ok(c, r.evo.report, r.evo.tuned);
    }
    csv << '\n';
  }
  write_file(c.output + "/sweep.csv", csv.str());
  write_file(c.output + "/sweep.json", "{\"stamp\": {\"config_hash\": \"" + c.hash() + "\", \"version\": \"" +
                                           code_version() + "\", \"tolerances\": " + c.tolerances_json() +
                                           "}, \"thresholds_met\": " + (ok ? "true" : "false") + "}\n");
  std::cout << "sweep over " << rows.size() << " values: " << (ok ? "thresholds met" : "thresholds missed") << '\n';
  return ok ? 0 : kThresholdFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-similar wave maps into warped spheres: profiles, spectra, evolution"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", code_version());

  std::string config_path, out_dir, profile_path, shape;
  int workers = 0, d = 0, grid = 0;
  long long seed = -1;
  std::vector<double> eps;
  double tau_max = 0.0, amplitude = -1.0, T = 0.0;
  bool no_evolve = false;

  app.add_option("--config", config_path, "Config file (.json, .ini, or key/value blocks)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--workers", workers, "Concurrent jobs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for randomized perturbations")->check(CLI::NonNegativeNumber);
  app.add_option("--epsilon", eps, "Perturbation parameter(s), comma separated")->delimiter(',');
  app.add_option("--d", d, "Dimension d >= 3");
  app.add_option("--grid", grid, "Evolution grid intervals");
  app.add_option("--tau-max", tau_max, "Evolution horizon in similarity time");

  auto* profile = app.add_subcommand("profile", "Solve blowup profiles and write JSON/CSV");
  auto* spectrum = app.add_subcommand("spectrum", "Linearized spectrum around the profile");
  spectrum->add_option("--profile", profile_path, "Use a saved profile instead of solving");
  auto* evolve = app.add_subcommand("evolve", "Tune the blowup time and evolve a perturbation");
  evolve->add_option("--shape", shape, "Perturbation shape: none, bump, bump2, shell, gauge, random");
  evolve->add_option("--amplitude", amplitude, "Perturbation amplitude");
  evolve->add_option("--T", T, "Fixed blowup time (disables tuning)");
  auto* sweep = app.add_subcommand("sweep", "Aggregate profile, spectrum and decay data over an epsilon grid");
  sweep->add_flag("--no-evolve", no_evolve, "Skip the evolution stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kValidation;
  }

  try {
    ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (!out_dir.empty()) c.output = out_dir;
    if (workers > 0) c.workers = workers;
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed), c.evolution.perturbation.seed = c.seed;
    if (!eps.empty()) c.epsilon = eps;
    if (d > 0 || app.count("--d")) c.d = d;
    if (grid > 0) c.evolution.grid = grid;
    if (tau_max > 0.0) c.evolution.tau_max = tau_max;
    if (!shape.empty()) c.evolution.perturbation.shape = shape;
    if (amplitude >= 0.0) c.evolution.perturbation.amplitude = amplitude;
    if (evolve->count("--T")) c.evolution.T = T, c.tune = false;
    c.validate();

    if (*profile) return cmd_profile(c);
    if (*spectrum) return cmd_spectrum(c, profile_path);
    if (*evolve) return cmd_evolve(c);
    return cmd_sweep(c, !no_evolve);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const NonConvergence& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kNonConvergence;
  }
}
