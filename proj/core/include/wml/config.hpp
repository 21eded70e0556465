#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wml/evolution.hpp"
#include "wml/geometry.hpp"
#include "wml/norms.hpp"
#include "wml/profile.hpp"

namespace wml {

std::string code_version();

struct ExperimentConfig {
  int d = 3;
  std::vector<double> epsilon{0.0};
  std::vector<std::pair<int, double>> basis{{1, 0.5}};

  std::string method = "shooting";  // or "collocation"
  ProfileConfig profile;
  CollocationConfig collocation;

  std::vector<int> spectral_N{64, 128};
  double x_max = 4.0;
  double drift_tol = 1e-6;
  double omega_threshold = 0.0;  // sweep fails when the gap drops to this value or below

  EvolutionConfig evolution;
  bool tune = true;

  NormSpec norms;

  std::string output = "out";
  std::uint64_t seed = 1;
  int workers = 1;

  // Format chosen by extension: .json, .ini, anything else is the property-tree INFO format
  // (key value pairs with nested { } blocks).
  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_text(const std::string& text, const std::string& format);

  std::string to_json() const;  // canonical: sorted keys, every field present
  std::string hash() const;     // FNV-1a 64 of to_json(), hex
  std::string tolerances_json() const;

  WarpedTarget target(double eps) const;
  void validate() const;
};

}  // namespace wml
