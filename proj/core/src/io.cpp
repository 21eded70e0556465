#include "wml/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wml/errors.hpp"
#include "wml/evolution.hpp"

namespace wml {

using nlohmann::json;

namespace {

json stamp_json(const RunStamp& s) {
  return {{"config_hash", s.config_hash},
          {"version", s.version},
          {"tolerances", s.tolerances.empty() ? json::object() : json::parse(s.tolerances)}};
}

// JSON has no inf/nan; keep them readable as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double denum(const json& j) {
  if (!j.is_string()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  throw ValidationError("not a number: " + s);
}

const char* center_name(FrobeniusSeries::Center c) {
  switch (c) {
    case FrobeniusSeries::Center::Origin: return "origin";
    case FrobeniusSeries::Center::LightCone: return "lightcone";
    default: return "infinity";
  }
}

json series_json(const FrobeniusSeries& s) {
  return {{"center", center_name(s.center)}, {"coef", s.coef},     {"free", s.free},
          {"resonance", s.resonance},        {"compat_residual", s.compat_residual}, {"radius", s.radius}};
}

FrobeniusSeries series_from(const json& j) {
  FrobeniusSeries s;
  const auto c = j.at("center").get<std::string>();
  s.center = c == "origin" ? FrobeniusSeries::Center::Origin
             : c == "lightcone" ? FrobeniusSeries::Center::LightCone
                                : FrobeniusSeries::Center::Infinity;
  s.coef = j.at("coef").get<std::vector<double>>();
  s.free = j.at("free").get<std::vector<int>>();
  s.resonance = j.at("resonance").get<int>();
  s.compat_residual = j.at("compat_residual").get<double>();
  s.radius = j.at("radius").get<double>();
  return s;
}

}  // namespace

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << content;
}

std::string profile_to_json(const ProfileSolution& sol, const RunStamp& stamp) {
  json basis = json::array();
  for (const auto& [m, c] : sol.target.basis().terms()) basis.push_back({m, c});
  json j = {{"stamp", stamp_json(stamp)},
            {"target", {{"d", sol.target.d()}, {"epsilon", sol.target.epsilon()}, {"basis", basis}}},
            {"method", sol.method},
            {"b", num(sol.b)},
            {"a", num(sol.a)},
            {"c", num(sol.c)},
            {"c1", num(sol.c1)},
            {"ctilde1", num(sol.ctilde1)},
            {"c1_richardson", num(sol.c1_richardson)},
            {"ctilde1_richardson", num(sol.ctilde1_richardson)},
            {"residual_norm", num(sol.residual_norm)},
            {"R_max", num(sol.R_max)},
            {"iterations", sol.iterations},
            {"eps_reached", num(sol.eps_reached)},
            {"series0", series_json(sol.series0)},
            {"series1", series_json(sol.series1)},
            {"series_inf", series_json(sol.series_inf)},
            {"grid", sol.grid},
            {"f", sol.f},
            {"fp", sol.fp},
            {"breaks", sol.breaks},
            {"piece_order", sol.piece_order},
            {"y_nodes", sol.y_nodes},
            {"u_nodes", sol.u_nodes}};
  return j.dump(1);
}

ProfileSolution profile_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto& t = j.at("target");
    std::vector<std::pair<int, double>> terms;
    for (const auto& b : t.at("basis")) terms.emplace_back(b.at(0).get<int>(), b.at(1).get<double>());
    ProfileSolution sol;
    sol.target = WarpedTarget(t.at("d").get<int>(), t.at("epsilon").get<double>(), PerturbationBasis(terms));
    sol.method = j.at("method").get<std::string>();
    for (auto [key, dst] : {std::pair{"b", &sol.b}, {"a", &sol.a}, {"c", &sol.c}, {"c1", &sol.c1},
                            {"ctilde1", &sol.ctilde1}, {"c1_richardson", &sol.c1_richardson},
                            {"ctilde1_richardson", &sol.ctilde1_richardson}, {"residual_norm", &sol.residual_norm},
                            {"R_max", &sol.R_max}, {"eps_reached", &sol.eps_reached}})
      *dst = denum(j.at(key));
    sol.iterations = j.at("iterations").get<int>();
    sol.series0 = series_from(j.at("series0"));
    sol.series1 = series_from(j.at("series1"));
    sol.series_inf = series_from(j.at("series_inf"));
    sol.grid = j.at("grid").get<std::vector<double>>();
    sol.f = j.at("f").get<std::vector<double>>();
    sol.fp = j.at("fp").get<std::vector<double>>();
    sol.breaks = j.at("breaks").get<std::vector<double>>();
    sol.piece_order = j.at("piece_order").get<int>();
    sol.y_nodes = j.at("y_nodes").get<std::vector<double>>();
    sol.u_nodes = j.at("u_nodes").get<std::vector<double>>();
    rebuild_curve(sol);
    return sol;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed profile file: ") + e.what());
  }
}

ProfileSolution load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing profile file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return profile_from_json(ss.str());
}

void write_profile_csv(std::ostream& out, const ProfileSolution& sol, const std::vector<double>& rho) {
  out << "rho,f,fp,psi1\n";
  for (double r : rho) {
    const auto d = sol.eval(r);
    out << fmt_double(r) << ',' << fmt_double(d.f) << ',' << fmt_double(d.f1) << ',' << fmt_double(d.u) << '\n';
  }
}

std::string spectrum_to_json(const std::vector<SpectrumRun>& runs, const RunStamp& stamp) {
  json arr = json::array();
  for (const auto& r : runs) {
    const auto& s = r.report;
    json ev = json::array();
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k)
      if (s.converged[k]) ev.push_back({s.eigenvalues[k].real(), s.eigenvalues[k].imag()});
    arr.push_back({{"epsilon", r.epsilon},
                   {"N", s.N},
                   {"gauge", {s.gauge.real(), s.gauge.imag()}},
                   {"gauge_error", std::abs(s.gauge - 1.0)},
                   {"gauge_drift", s.gauge_drift},
                   {"gauge_residual", s.gauge_residual},
                   {"gap", num(s.gap)},
                   {"max_unconverged_re", num(s.max_unconverged_re)},
                   {"converged_eigenvalues", ev}});
  }
  return json{{"stamp", stamp_json(stamp)}, {"runs", arr}}.dump(1);
}

void write_eigenvalues_csv(std::ostream& out, const std::vector<SpectrumRun>& runs) {
  out << "epsilon,N,index,re,im,drift,converged\n";
  for (const auto& r : runs) {
    const auto& s = r.report;
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k)
      out << fmt_double(r.epsilon) << ',' << s.N << ',' << k << ',' << fmt_double(s.eigenvalues[k].real()) << ','
          << fmt_double(s.eigenvalues[k].imag()) << ',' << fmt_double(s.drift[k]) << ',' << (s.converged[k] ? 1 : 0)
          << '\n';
  }
}

std::string decay_to_json(const DecayReport& rep, const TuneResult* tune, const RunStamp& stamp) {
  json rates = json::array();
  for (std::size_t k = 0; k < rep.orders.size(); ++k)
    rates.push_back({{"order", rep.orders[k]},
                     {"rate", rep.rates[k]},
                     {"stderr", rep.rate_errors[k]},
                     {"monotone", static_cast<bool>(rep.monotone[k])}});
  const auto diag = physical_diagnostics(rep);
  json j = {{"stamp", stamp_json(stamp)},
            {"T", rep.T},
            {"b", rep.b},
            {"rates", rates},
            {"growth_exponent", rep.growth_exponent},
            {"a_infinity", rep.a_infinity},
            {"blowup", rep.blowup},
            {"blowup_tau", rep.blowup_tau},
            {"tau_end", rep.tau.empty() ? 0.0 : rep.tau.back()},
            {"diagnostic_end", diag.value.empty() ? 0.0 : diag.value.back()}};
  if (tune) {
    json hist = json::array();
    for (const auto& [T, a] : tune->history) hist.push_back({T, a});
    j["tune"] = {{"T_star", tune->T},
                 {"T_linear", tune->T_linear},
                 {"a_infinity", tune->a_infinity},
                 {"iterations", tune->iterations},
                 {"history", hist}};
  }
  return j.dump(1);
}

void write_decay_csv(std::ostream& out, const DecayReport& rep) {
  const auto diag = physical_diagnostics(rep);
  out << "tau,t,a";
  for (int j : rep.orders) out << ",norm_" << j;
  out << ",sup,diagnostic\n";
  for (std::size_t i = 0; i < rep.tau.size(); ++i) {
    out << fmt_double(rep.tau[i]) << ',' << fmt_double(diag.t[i]) << ',' << fmt_double(rep.a[i]);
    for (std::size_t k = 0; k < rep.orders.size(); ++k) out << ',' << fmt_double(rep.norms[k][i]);
    out << ',' << fmt_double(rep.sup[i]) << ',' << fmt_double(diag.value[i]) << '\n';
  }
}

std::string lipschitz_to_json(const LipschitzReport& rep, const RunStamp& stamp) {
  json pairs = json::array();
  for (const auto& p : rep.pairs) pairs.push_back({{"eps", p.eps}, {"kappa", p.kappa}, {"sup", p.sup}});
  return json{{"stamp", stamp_json(stamp)}, {"pairs", pairs}, {"max", rep.max}}.dump(1);
}

}  // namespace wml
