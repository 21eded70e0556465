#include "wml/operators.hpp"

#include <cassert>

namespace wml {

namespace {

template <class F>
RadialField map_field(const RadialField& a, int component, F&& fn) {
  RadialField out;
  out.rho = a.rho;
  out.parity = Parity::Even;
  out.component = component;
  out.v.resize(a.v.size());
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = fn(a.rho[i], a.v[i], i);
  return out;
}

}  // namespace

RadialField make_field(const std::vector<double>& rho, const std::function<double(double)>& fn, int component) {
  RadialField out;
  out.rho = rho;
  out.component = component;
  out.v.reserve(rho.size());
  for (double r : rho) out.v.push_back(fn(r));
  return out;
}

double nonlinearity_at(const WarpedTarget& t, double rho, double psi) {
  return (t.n() - 3.0) * psi * psi * psi * t.eta_over_cube(rho * psi);
}

double potential_at(const WarpedTarget& t, double rho, double psi) {
  return (t.n() - 3.0) * psi * psi * t.etap_over_square(rho * psi);
}

double remainder_at(const WarpedTarget& t, double rho, double psi, double u) {
  const double q = psi + u;
  return (t.n() - 3.0) * (q * q * q * t.eta_over_cube(rho * q) - psi * psi * psi * t.eta_over_cube(rho * psi) -
                          psi * psi * t.etap_over_square(rho * psi) * u);
}

RadialField apply_nonlinearity(const WarpedTarget& t, const RadialField& psi1) {
  return map_field(psi1, 2, [&](double r, double p, std::size_t) { return nonlinearity_at(t, r, p); });
}

RadialField potential(const WarpedTarget& t, const RadialField& base) {
  return map_field(base, 2, [&](double r, double p, std::size_t) { return potential_at(t, r, p); });
}

RadialField nonlinear_remainder(const WarpedTarget& t, const RadialField& base, const RadialField& u1) {
  assert(base.v.size() == u1.v.size());
  return map_field(base, 2, [&](double r, double p, std::size_t i) { return remainder_at(t, r, p, u1.v[i]); });
}

RadialField epsilon_remainder(const WarpedTarget& t, const RadialField& psi0) {
  const WarpedTarget t0 = t.with_epsilon(0.0);
  return map_field(psi0, 2, [&](double r, double p, std::size_t) {
    return (t.n() - 3.0) * p * p * p * (t.eta_over_cube(r * p) - t0.eta_over_cube(r * p));
  });
}

RadialField potential_shift(const WarpedTarget& t, const RadialField& psi0) {
  const WarpedTarget t0 = t.with_epsilon(0.0);
  return map_field(psi0, 2, [&](double r, double p, std::size_t) {
    return (t.n() - 3.0) * p * p * (t.etap_over_square(r * p) - t0.etap_over_square(r * p));
  });
}

std::array<double, 2> free_operator(int n, double rho, const std::array<double, 3>& p1,
                                    const std::array<double, 2>& p2) {
  const double lap = rho == 0.0 ? n * p1[2] : p1[2] + (n - 1.0) / rho * p1[1];
  return {-rho * p1[1] - p1[0] + p2[0], lap - rho * p2[1] - 2.0 * p2[0]};
}

StaticFields static_fields(const ProfileSolution& profile, const std::vector<double>& rho) {
  StaticFields s;
  s.psi1.rho = s.psi2.rho = rho;
  s.psi1.component = 1;
  s.psi2.component = 2;
  for (double r : rho) {
    const auto d = profile.eval(r);
    s.psi1.v.push_back(d.u);
    s.psi2.v.push_back(d.f1);
  }
  return s;
}

StaticFields static_residual(const ProfileSolution& profile, const std::vector<double>& rho) {
  StaticFields s;
  s.psi1.rho = s.psi2.rho = rho;
  s.psi1.component = 1;
  s.psi2.component = 2;
  const int n = profile.target.n();
  for (double r : rho) {
    const auto d = profile.eval(r);
    auto L = free_operator(n, r, {d.u, d.u1, d.u2}, {d.f1, d.f2});
    L[1] += nonlinearity_at(profile.target, r, d.u);
    s.psi1.v.push_back(L[0]);
    s.psi2.v.push_back(L[1]);
  }
  return s;
}

StaticFields gauge_mode(const ProfileSolution& profile, const std::vector<double>& rho) {
  StaticFields g;
  g.psi1.rho = g.psi2.rho = rho;
  g.psi1.component = 1;
  g.psi2.component = 2;
  for (double r : rho) {
    const auto d = profile.eval(r);
    g.psi1.v.push_back(d.f1);
    g.psi2.v.push_back(2.0 * d.f1 + r * d.f2);
  }
  return g;
}

}  // namespace wml
