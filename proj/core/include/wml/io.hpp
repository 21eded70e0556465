#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "wml/evolution.hpp"
#include "wml/profile.hpp"
#include "wml/spectral.hpp"

namespace wml {

// Provenance embedded in every output file.
struct RunStamp {
  std::string config_hash;
  std::string version;
  std::string tolerances;  // JSON object text
};

std::string profile_to_json(const ProfileSolution& sol, const RunStamp& stamp);
ProfileSolution profile_from_json(const std::string& text);
ProfileSolution load_profile(const std::string& path);
void write_profile_csv(std::ostream& out, const ProfileSolution& sol, const std::vector<double>& rho);

struct SpectrumRun {
  double epsilon = 0.0;
  SpectrumReport report;
};
std::string spectrum_to_json(const std::vector<SpectrumRun>& runs, const RunStamp& stamp);
void write_eigenvalues_csv(std::ostream& out, const std::vector<SpectrumRun>& runs);

std::string decay_to_json(const DecayReport& rep, const TuneResult* tune, const RunStamp& stamp);
void write_decay_csv(std::ostream& out, const DecayReport& rep);

std::string lipschitz_to_json(const LipschitzReport& rep, const RunStamp& stamp);

// %.17g, so values round-trip and output is byte-stable.
std::string fmt_double(double v);
void write_file(const std::string& path, const std::string& content);

}  // namespace wml
