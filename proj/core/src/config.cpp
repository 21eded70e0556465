#include "wml/config.hpp"

#include <boost/property_tree/info_parser.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wml/errors.hpp"

#ifndef WML_VERSION
#define WML_VERSION "unknown"
#endif

namespace wml {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& block, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError("config block '" + block + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ValidationError("unknown config key '" + (block.empty() ? k : block + "." + k) + "'");
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

json leaf(const std::string& raw) {
  std::string s = raw;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.find(',') != std::string::npos) {
    json arr = json::array();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) arr.push_back(leaf(item));
    return arr;
  }
  if (!s.empty()) {
    try {
      return json::parse(s);
    } catch (const json::exception&) {
    }
  }
  return s;
}

// Dotted keys become nested objects, so INI sections like [evolution.perturbation] work.
void insert(json& node, const std::string& key, json value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    if (node.contains(key) && node[key].is_object() && value.is_object()) node[key].update(value);
    else node[key] = std::move(value);
    return;
  }
  insert(node[key.substr(0, dot)], key.substr(dot + 1), std::move(value));
}

json from_ptree(const boost::property_tree::ptree& pt) {
  json out = json::object();
  for (const auto& [k, child] : pt) insert(out, k, child.empty() ? leaf(child.data()) : from_ptree(child));
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ExperimentConfig parse(const json& j) {
  ExperimentConfig c;
  check_keys(j, "", {"target", "profile", "collocation", "spectral", "evolution", "norms", "output", "seed", "workers"});
  if (j.contains("target")) {
    const auto& t = j["target"];
    check_keys(t, "target", {"d", "epsilon", "basis"});
    take(t, "d", c.d);
    if (t.contains("epsilon")) {
      if (t["epsilon"].is_array()) take(t, "epsilon", c.epsilon);
      else c.epsilon = {t["epsilon"].get<double>()};
    }
    if (t.contains("basis")) {
      c.basis.clear();
      // [[m, c_m], ...], a flat list of coefficients c_1, c_2, ..., or c_1 alone
      const json b = t["basis"].is_number() ? json::array({t["basis"]}) : t["basis"];
      if (!b.is_array()) throw ValidationError("target.basis must be a list");
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (b[i].is_array()) c.basis.emplace_back(b[i].at(0).get<int>(), b[i].at(1).get<double>());
        else if (b[i].get<double>() != 0.0) c.basis.emplace_back(static_cast<int>(i) + 1, b[i].get<double>());
      }
    }
  }
  if (j.contains("profile")) {
    const auto& p = j["profile"];
    check_keys(p, "profile", {"method", "series_order", "rho_series", "rho_match", "R_max", "ode_tol", "newton_tol",
                              "newton_max", "continuation_step", "min_step", "residual_tol", "piece_order",
                              "interior_pieces", "exterior_ratio"});
    take(p, "method", c.method);
    take(p, "series_order", c.profile.series_order);
    take(p, "rho_series", c.profile.rho_series);
    take(p, "rho_match", c.profile.rho_match);
    take(p, "R_max", c.profile.R_max);
    take(p, "ode_tol", c.profile.ode_tol);
    take(p, "newton_tol", c.profile.newton_tol);
    take(p, "newton_max", c.profile.newton_max);
    take(p, "continuation_step", c.profile.continuation_step);
    take(p, "min_step", c.profile.min_step);
    take(p, "residual_tol", c.profile.residual_tol);
    take(p, "piece_order", c.profile.piece_order);
    take(p, "interior_pieces", c.profile.interior_pieces);
    take(p, "exterior_ratio", c.profile.exterior_ratio);
  }
  if (j.contains("collocation")) {
    const auto& p = j["collocation"];
    check_keys(p, "collocation", {"N", "picard", "max_iter", "tol"});
    take(p, "N", c.collocation.N);
    take(p, "picard", c.collocation.picard);
    take(p, "max_iter", c.collocation.max_iter);
    take(p, "tol", c.collocation.tol);
  }
  if (j.contains("spectral")) {
    const auto& s = j["spectral"];
    check_keys(s, "spectral", {"N", "x_max", "drift_tol", "omega_threshold"});
    if (s.contains("N")) {
      if (s["N"].is_array()) take(s, "N", c.spectral_N);
      else c.spectral_N = {s["N"].get<int>()};
    }
    take(s, "x_max", c.x_max);
    take(s, "drift_tol", c.drift_tol);
    take(s, "omega_threshold", c.omega_threshold);
  }
  if (j.contains("evolution")) {
    const auto& e = j["evolution"];
    check_keys(e, "evolution", {"R", "grid", "cfl", "dt", "tau_max", "T", "delta", "rho_s", "dissipation",
                                "record_interval", "norm_radius", "blowup_threshold", "spectral_N", "fit_start",
                                "growth_window", "tune_window", "tune_tol", "tune_max_iter", "tune", "perturbation"});
    auto& v = c.evolution;
    take(e, "R", v.R);
    take(e, "grid", v.grid);
    take(e, "cfl", v.cfl);
    take(e, "dt", v.dt);
    take(e, "tau_max", v.tau_max);
    take(e, "T", v.T);
    take(e, "delta", v.delta);
    take(e, "rho_s", v.rho_s);
    take(e, "dissipation", v.dissipation);
    take(e, "record_interval", v.record_interval);
    take(e, "norm_radius", v.norm_radius);
    take(e, "blowup_threshold", v.blowup_threshold);
    take(e, "spectral_N", v.spectral_N);
    take(e, "fit_start", v.fit_start);
    take(e, "tune_tol", v.tune_tol);
    take(e, "tune_max_iter", v.tune_max_iter);
    take(e, "tune", c.tune);
    for (auto [key, dst] : {std::pair{"growth_window", v.growth_window}, std::pair{"tune_window", v.tune_window}})
      if (e.contains(key)) {
        const auto w = e[key].get<std::vector<double>>();
        if (w.size() != 2) throw ValidationError(std::string("evolution.") + key + " needs two values");
        dst[0] = w[0];
        dst[1] = w[1];
      }
    if (e.contains("perturbation")) {
      const auto& p = e["perturbation"];
      check_keys(p, "evolution.perturbation", {"shape", "amplitude", "support"});
      take(p, "shape", v.perturbation.shape);
      take(p, "amplitude", v.perturbation.amplitude);
      take(p, "support", v.perturbation.support);
    }
  }
  if (j.contains("norms")) {
    const auto& n = j["norms"];
    check_keys(n, "norms", {"orders", "weights", "s", "stencil", "k_cap"});
    if (n.contains("orders")) {
      if (n["orders"].is_array()) take(n, "orders", c.norms.orders);
      else c.norms.orders = {n["orders"].get<int>()};
    }
    if (n.contains("weights")) {
      if (n["weights"].is_array()) take(n, "weights", c.norms.weights);
      else c.norms.weights = {n["weights"].get<double>()};
    }
    if (n.contains("s") && !n["s"].is_null()) c.norms.s = n["s"].get<double>();
    take(n, "stencil", c.norms.stencil);
    take(n, "k_cap", c.norms.k_cap);
  }
  take(j, "output", c.output);
  take(j, "seed", c.seed);
  take(j, "workers", c.workers);
  c.evolution.norm_orders = c.norms.orders;
  c.evolution.perturbation.seed = c.seed;
  return c;
}

}  // namespace

std::string code_version() { return WML_VERSION; }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse(j);
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text, const std::string& format) {
  if (format == "json") return from_json(text);
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    if (format == "ini") boost::property_tree::read_ini(in, pt);
    else if (format == "info") boost::property_tree::read_info(in, pt);
    else throw ValidationError("unknown config format: " + format);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return parse(from_ptree(pt));
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto ends = [&](const char* ext) {
    const std::string e(ext);
    return path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0;
  };
  const char* format = ends(".json") ? "json" : ends(".ini") ? "ini" : "info";
  return from_text(ss.str(), format);
}

std::string ExperimentConfig::to_json() const {
  json j;
  json basis_j = json::array();
  for (const auto& [m, c] : basis) basis_j.push_back({m, c});
  j["target"] = {{"d", d}, {"epsilon", epsilon}, {"basis", basis_j}};
  const auto& p = profile;
  j["profile"] = {{"method", method},
                  {"series_order", p.series_order},
                  {"rho_series", p.rho_series},
                  {"rho_match", p.rho_match},
                  {"R_max", p.R_max},
                  {"ode_tol", p.ode_tol},
                  {"newton_tol", p.newton_tol},
                  {"newton_max", p.newton_max},
                  {"continuation_step", p.continuation_step},
                  {"min_step", p.min_step},
                  {"residual_tol", p.residual_tol},
                  {"piece_order", p.piece_order},
                  {"interior_pieces", p.interior_pieces},
                  {"exterior_ratio", p.exterior_ratio}};
  j["collocation"] = {{"N", collocation.N},
                      {"picard", collocation.picard},
                      {"max_iter", collocation.max_iter},
                      {"tol", collocation.tol}};
  j["spectral"] = {{"N", spectral_N}, {"x_max", x_max}, {"drift_tol", drift_tol}, {"omega_threshold", omega_threshold}};
  const auto& e = evolution;
  j["evolution"] = {{"R", e.R},
                    {"grid", e.grid},
                    {"cfl", e.cfl},
                    {"dt", e.dt},
                    {"tau_max", e.tau_max},
                    {"T", e.T},
                    {"delta", e.delta},
                    {"rho_s", e.rho_s},
                    {"dissipation", e.dissipation},
                    {"record_interval", e.record_interval},
                    {"norm_radius", e.norm_radius},
                    {"blowup_threshold", e.blowup_threshold},
                    {"spectral_N", e.spectral_N},
                    {"fit_start", e.fit_start},
                    {"growth_window", {e.growth_window[0], e.growth_window[1]}},
                    {"tune_window", {e.tune_window[0], e.tune_window[1]}},
                    {"tune_tol", e.tune_tol},
                    {"tune_max_iter", e.tune_max_iter},
                    {"tune", tune},
                    {"perturbation",
                     {{"shape", e.perturbation.shape},
                      {"amplitude", e.perturbation.amplitude},
                      {"support", e.perturbation.support}}}};
  j["norms"] = {{"orders", norms.orders},
                {"weights", norms.weights},
                {"s", norms.s ? json(*norms.s) : json(nullptr)},
                {"stencil", norms.stencil},
                {"k_cap", norms.k_cap}};
  j["output"] = output;
  j["seed"] = seed;
  j["workers"] = workers;
  return j.dump();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

std::string ExperimentConfig::tolerances_json() const {
  json t = {{"ode_tol", profile.ode_tol},         {"newton_tol", profile.newton_tol},
            {"residual_tol", profile.residual_tol}, {"collocation_tol", collocation.tol},
            {"drift_tol", drift_tol},               {"tune_tol", evolution.tune_tol}};
  return t.dump();
}

WarpedTarget ExperimentConfig::target(double eps) const { return WarpedTarget(d, eps, PerturbationBasis(basis)); }

void ExperimentConfig::validate() const {
  if (d < 3) throw ValidationError("d must be at least 3");
  if (epsilon.empty()) throw ValidationError("epsilon grid is empty");
  if (method != "shooting" && method != "collocation") throw ValidationError("profile.method must be shooting or collocation");
  if (spectral_N.empty()) throw ValidationError("spectral.N list is empty");
  for (int N : spectral_N)
    if (N < 16 || N % 2) throw ValidationError("spectral N must be even and at least 16");
  if (workers < 1) throw ValidationError("workers must be positive");
  PerturbationBasis pb(basis);
  for (double e : epsilon) WarpedTarget(d, e, pb);
  norms.validate(d + 2);
  evolution.validate();
}

}  // namespace wml
