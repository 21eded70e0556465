#include "wml/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wml/errors.hpp"

namespace wml {

namespace {

constexpr double kPi = 3.14159265358979323846;

// d^k/du^k sin(u) and cos(u)
double sin_deriv(double s, double c, int k) {
  switch (k & 3) {
    case 0: return s;
    case 1: return c;
    case 2: return -s;
    default: return -c;
  }
}

double cos_deriv(double s, double c, int k) {
  switch (k & 3) {
    case 0: return c;
    case 1: return -s;
    case 2: return -c;
    default: return s;
  }
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_order(int order) {
  if (order < 0 || order > kMaxOrder)
    throw UnsupportedOrder("derivative order " + std::to_string(order) + " exceeds K_max = " +
                           std::to_string(kMaxOrder));
}

}  // namespace

double SinePoly::eval(double u, int order) const {
  double r = 0.0;
  if (order == 0) r = linear * u;
  else if (order == 1) r = linear;
  for (std::size_t k = 1; k < coef.size(); ++k) {
    if (coef[k] == 0.0) continue;
    const double kk = static_cast<double>(k);
    r += coef[k] * std::pow(kk, order) * sin_deriv(std::sin(kk * u), std::cos(kk * u), order);
  }
  return r;
}

PerturbationBasis::PerturbationBasis() : PerturbationBasis({{1, 0.5}}) {}

PerturbationBasis::PerturbationBasis(std::vector<std::pair<int, double>> terms)
    : terms_(std::move(terms)) {
  bool any = false;
  for (auto [m, c] : terms_) {
    if (m < 1) throw ValidationError("basis index m must be a positive integer");
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("basis coefficients must be >= 0");
    any = any || c > 0.0;
  }
  if (!any) throw ValidationError("alpha must have at least one positive coefficient");

  // Sample then polish each candidate maximum by golden section.
  const int samples = 10000;
  double best = 0.0, best_u = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double u = kPi * i / samples;
    const double a = alpha(u);
    if (a > best) best = a, best_u = u;
  }
  double lo = std::max(0.0, best_u - kPi / samples), hi = std::min(kPi, best_u + kPi / samples);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    if (alpha(a) > alpha(b)) hi = b;
    else lo = a;
  }
  best = std::max(best, alpha(0.5 * (lo + hi)));
  eps0_ = 1.0 / best;
}

double PerturbationBasis::alpha(double u, int order) const {
  double r = 0.0;
  for (auto [m, c] : terms_) {
    const double k = 2.0 * m;
    double t = -std::pow(k, order) * cos_deriv(std::sin(k * u), std::cos(k * u), order);
    if (order == 0) t += 1.0;
    r += c * t;
  }
  return r;
}

WarpedTarget::WarpedTarget(int d, double epsilon, PerturbationBasis basis)
    : d_(d), eps_(epsilon), basis_(std::move(basis)) {
  if (d < 3) throw ValidationError("dimension d must be >= 3");
  if (!std::isfinite(epsilon) || std::abs(epsilon) > basis_.eps0() * (1.0 + 1e-12))
    throw ValidationError("|epsilon| exceeds eps0");

  // w(u) = (1 + eps C) sin u - eps/2 sum_m c_m (sin((2m+1)u) - sin((2m-1)u))
  int top = 1;
  for (auto [m, c] : basis_.terms()) top = std::max(top, 2 * m + 1);
  std::vector<double> A(top + 1, 0.0);
  A[1] = 1.0;
  for (auto [m, c] : basis_.terms()) {
    A[1] += eps_ * c;
    A[2 * m + 1] -= 0.5 * eps_ * c;
    A[2 * m - 1] += 0.5 * eps_ * c;
  }
  w_poly_.coef = A;

  std::vector<double> G(2 * top + 1, 0.0);
  for (int j = 1; j <= top; ++j)
    for (int k = 1; k <= top; ++k) {
      const double p = 0.25 * A[j] * A[k];
      if (p == 0.0) continue;
      G[j + k] += p * (j + k);
      if (j != k) G[std::abs(j - k)] -= p * std::abs(j - k);
    }
  while (G.size() > 1 && G.back() == 0.0) G.pop_back();
  ww_poly_.coef = G;

  eta_poly_.linear = 1.0;
  eta_poly_.coef = G;
  for (double& g : eta_poly_.coef) g = -g;

  // Odd Taylor coefficients of eta at 0.
  const int deg = 41;
  eta_taylor_.assign(deg + 1, 0.0);
  for (int k = 1; k <= deg; k += 2) {
    double s = 0.0;
    for (std::size_t j = 1; j < G.size(); ++j) {
      double t = 1.0;  // j^k / k!
      for (int i = 1; i <= k; ++i) t *= static_cast<double>(j) / i;
      s += G[j] * t;
    }
    const double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    eta_taylor_[k] = -sign * s + (k == 1 ? 1.0 : 0.0);
  }
  eta_taylor_[1] = 0.0;  // exact: w'(0)^2 = 1
  const int freq = std::max(1, eta_poly_.degree());
  small_cut_ = std::min(0.25, 1.5 / freq);
}

double WarpedTarget::alpha(double u, int order) const {
  check_order(order);
  return basis_.alpha(u, order);
}

double WarpedTarget::w_raw(double u, int k) const {
  const double s = std::sin(u), c = std::cos(u);
  double r = 0.0;
  for (int j = 0; j <= k; ++j) {
    double second = eps_ * basis_.alpha(u, k - j);
    if (j == k) second += 1.0;
    r += binom(k, j) * sin_deriv(s, c, j) * second;
  }
  return r;
}

double WarpedTarget::ww_raw(double u, int k) const {
  double r = 0.0;
  for (int j = 0; j <= k; ++j) r += binom(k, j) * w_raw(u, j) * w_raw(u, k - j + 1);
  return r;
}

double WarpedTarget::w(double u, int order) const {
  check_order(order);
  return w_raw(u, order);
}

double WarpedTarget::eta(double y, int order) const {
  check_order(order);
  const double g = ww_raw(y, order);
  if (order == 0) return y - g;
  if (order == 1) return 1.0 - g;
  return -g;
}

double WarpedTarget::eta_over_cube(double y) const {
  if (std::abs(y) < small_cut_) {
    const double y2 = y * y;
    double r = 0.0;
    for (int k = static_cast<int>(eta_taylor_.size()) - 1; k >= 3; k -= 2) r = r * y2 + eta_taylor_[k];
    return r;
  }
  return eta_poly_.eval(y) / (y * y * y);
}

double WarpedTarget::etap_over_square(double y) const {
  if (std::abs(y) < small_cut_) {
    const double y2 = y * y;
    double r = 0.0;
    for (int k = static_cast<int>(eta_taylor_.size()) - 1; k >= 3; k -= 2) r = r * y2 + k * eta_taylor_[k];
    return r;
  }
  return eta_poly_.eval(y, 1) / (y * y);
}

double WarpedTarget::etapp_over_linear(double y) const {
  if (std::abs(y) < small_cut_) {
    const double y2 = y * y;
    double r = 0.0;
    for (int k = static_cast<int>(eta_taylor_.size()) - 1; k >= 3; k -= 2)
      r = r * y2 + k * (k - 1) * eta_taylor_[k];
    return r;
  }
  return eta_poly_.eval(y, 2) / y;
}

TargetJet taylor_jet(const WarpedTarget& target, double center, int order) {
  if (order < 0 || order > kSeriesCap)
    throw UnsupportedOrder("jet order " + std::to_string(order) + " exceeds series cap");
  TargetJet jet;
  jet.center = center;
  jet.w.resize(order + 1);
  jet.ww.resize(order + 1);
  jet.eta.resize(order + 1);
  double fact = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) fact *= k;
    jet.w[k] = target.w_poly().eval(center, k) / fact;
    jet.ww[k] = target.ww_poly().eval(center, k) / fact;
    jet.eta[k] = target.eta_poly().eval(center, k) / fact;
  }
  return jet;
}

SineComposer::SineComposer(const SinePoly& h, double F0) : h_(&h) {
  S_.resize(h.coef.size());
  C_.resize(h.coef.size());
  push(F0);
}

double SineComposer::push(double Fj) {
  const int j = static_cast<int>(F_.size());
  F_.push_back(Fj);
  double out = h_->linear * Fj;
  for (std::size_t k = 1; k < h_->coef.size(); ++k) {
    if (h_->coef[k] == 0.0) continue;
    auto& S = S_[k];
    auto& C = C_[k];
    const double kk = static_cast<double>(k);
    double s, c;
    if (j == 0) {
      s = std::sin(kk * Fj);
      c = std::cos(kk * Fj);
    } else {
      s = 0.0, c = 0.0;
      for (int i = 1; i <= j; ++i) {
        s += i * F_[i] * C[j - i];
        c -= i * F_[i] * S[j - i];
      }
      s *= kk / j;
      c *= kk / j;
    }
    S.push_back(s);
    C.push_back(c);
    out += h_->coef[k] * s;
  }
  out_.push_back(out);
  return out;
}

void SineComposer::pop() {
  F_.pop_back();
  out_.pop_back();
  for (std::size_t k = 1; k < h_->coef.size(); ++k) {
    if (h_->coef[k] == 0.0) continue;
    S_[k].pop_back();
    C_[k].pop_back();
  }
}

double SineComposer::coefficient(int j) const { return out_.at(j); }

std::vector<double> compose(const SinePoly& h, const std::vector<double>& F, int order) {
  SineComposer comp(h, F.empty() ? 0.0 : F[0]);
  for (int j = 1; j <= order; ++j) comp.push(j < static_cast<int>(F.size()) ? F[j] : 0.0);
  std::vector<double> out(order + 1);
  for (int j = 0; j <= order; ++j) out[j] = comp.coefficient(j);
  return out;
}

}  // namespace wml
