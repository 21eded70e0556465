#pragma once

#include <stdexcept>
#include <string>

namespace wml {

// Configuration or input outside the supported domain.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedOrder : ValidationError {
  using ValidationError::ValidationError;
};

// Any iterative or series procedure that did not reach its tolerance.
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergedSeries : NonConvergence {
  using NonConvergence::NonConvergence;
};

struct NoAnalyticBranch : NonConvergence {
  using NonConvergence::NonConvergence;
};

struct DegenerateProfile : NonConvergence {
  using NonConvergence::NonConvergence;
};

struct ContractionFailure : NonConvergence {
  using NonConvergence::NonConvergence;
};

struct SingularJacobian : NonConvergence {
  SingularJacobian(const std::string& what, double smallest)
      : NonConvergence(what), smallest_eigenvalue(smallest) {}
  double smallest_eigenvalue;
};

}  // namespace wml
