#pragma once

#include <utility>
#include <vector>

namespace wml {

inline constexpr int kMaxOrder = 8;
inline constexpr int kSeriesCap = 64;

// h(u) = linear*u + sum_k coef[k] sin(k u)
struct SinePoly {
  double linear = 0.0;
  std::vector<double> coef;

  double eval(double u, int order = 0) const;
  int degree() const { return coef.empty() ? 0 : static_cast<int>(coef.size()) - 1; }
};

// alpha(u) = sum_m c_m (1 - cos(2 m u)), all c_m >= 0.
class PerturbationBasis {
 public:
  PerturbationBasis();
  explicit PerturbationBasis(std::vector<std::pair<int, double>> terms);

  const std::vector<std::pair<int, double>>& terms() const { return terms_; }
  double alpha(double u, int order = 0) const;
  double eps0() const { return eps0_; }

 private:
  std::vector<std::pair<int, double>> terms_;
  double eps0_ = 1.0;
};

class WarpedTarget {
 public:
  WarpedTarget(int d, double epsilon, PerturbationBasis basis = PerturbationBasis());

  int d() const { return d_; }
  int n() const { return d_ + 2; }
  double epsilon() const { return eps_; }
  const PerturbationBasis& basis() const { return basis_; }
  WarpedTarget with_epsilon(double epsilon) const { return WarpedTarget(d_, epsilon, basis_); }

  double alpha(double u, int order = 0) const;
  double w(double u, int order = 0) const;
  double eta(double y, int order = 0) const;

  // w w' and eta as sine polynomials; exact to any order.
  const SinePoly& w_poly() const { return w_poly_; }
  const SinePoly& ww_poly() const { return ww_poly_; }
  const SinePoly& eta_poly() const { return eta_poly_; }

  // Quotients that stay accurate as y -> 0.
  double eta_over_cube(double y) const;
  double etap_over_square(double y) const;
  double etapp_over_linear(double y) const;

 private:
  double w_raw(double u, int order) const;
  double ww_raw(double u, int order) const;

  int d_;
  double eps_;
  PerturbationBasis basis_;
  SinePoly w_poly_, ww_poly_, eta_poly_;
  std::vector<double> eta_taylor_;  // eta(y) = sum eta_taylor_[k] y^k near 0
  double small_cut_ = 0.25;
};

struct TargetJet {
  double center = 0.0;
  std::vector<double> w, ww, eta;  // Taylor coefficients in (u - center)
};

TargetJet taylor_jet(const WarpedTarget& target, double center, int order);

// Taylor coefficients of h(F(t)) up to t^order, F given by its coefficients.
std::vector<double> compose(const SinePoly& h, const std::vector<double>& F, int order);

// Incremental version of compose: coefficients of h(F) are produced as F grows.
class SineComposer {
 public:
  SineComposer(const SinePoly& h, double F0);

  int size() const { return static_cast<int>(F_.size()); }
  // Appends F_j (j = size()) and returns coefficient j of h(F).
  double push(double Fj);
  void pop();
  double coefficient(int j) const;

 private:
  const SinePoly* h_;
  std::vector<double> F_;
  std::vector<std::vector<double>> S_, C_;  // per frequency k
  std::vector<double> out_;
};

}  // namespace wml
