#include "wml/profile.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "wml/chebyshev.hpp"
#include "wml/errors.hpp"

namespace wml {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;

// prod_{i=0}^{k-1} (j - i)
double falling(int j, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (j - i);
  return r;
}

double horner_deriv(const std::vector<double>& c, double t, int k) {
  double r = 0.0;
  for (int i = static_cast<int>(c.size()) - 1; i >= k; --i) r = r * t + c[i] * falling(i, k);
  return r;
}

struct ProfileOde {
  const WarpedTarget* t;
  void operator()(const State& x, State& dx, double rho) const {
    dx[0] = x[1];
    dx[1] = second_derivative(*t, rho, x[0], x[1]);
  }
};

auto make_stepper(double tol) {
  return odeint::make_controlled<odeint::runge_kutta_fehlberg78<State>>(1e-30, tol);
}

State integrate(const WarpedTarget& target, State x, double from, double to, double tol) {
  auto stepper = make_stepper(tol);
  const double dt = (to > from ? 1.0 : -1.0) * 1e-3;
  odeint::integrate_adaptive(stepper, ProfileOde{&target}, x, from, to, dt);
  return x;
}

// States at `nodes` (monotone, nodes[0] is the start) by adaptive integration.
std::vector<State> integrate_nodes(const WarpedTarget& target, State x,
                                   const std::vector<double>& nodes, double tol) {
  std::vector<State> out;
  out.reserve(nodes.size());
  auto stepper = make_stepper(tol);
  const double dt = (nodes.back() > nodes.front() ? 1.0 : -1.0) * 1e-3;
  odeint::integrate_times(stepper, ProfileOde{&target}, x, nodes.begin(), nodes.end(), dt,
                          [&](const State& s, double) { out.push_back(s); });
  return out;
}

void fill_u(ProfileDerivs& d, double rho) {
  d.u = d.f / rho;
  d.u1 = (d.f1 - d.u) / rho;
  d.u2 = (d.f2 - 2.0 * d.u1) / rho;
}

// Piecewise Chebyshev data for f and f' between the series regions.
class SampledCurve final : public ProfileCurve {
 public:
  SampledCurve(WarpedTarget target, FrobeniusSeries s0, FrobeniusSeries s1, FrobeniusSeries sinf,
               std::vector<double> breaks, int order, const std::vector<double>& f,
               const std::vector<double>& fp)
      : t_(std::move(target)),
        s0_(std::move(s0)),
        s1_(std::move(s1)),
        sinf_(std::move(sinf)),
        breaks_(std::move(breaks)),
        order_(order) {
    const std::size_t pieces = breaks_.size() - 1, m = order_ + 1;
    for (std::size_t p = 0; p < pieces; ++p) {
      const Eigen::VectorXd x = chebyshev_nodes(order_, breaks_[p], breaks_[p + 1]);
      nodes_.emplace_back(x.data(), x.data() + x.size());
      f_.push_back(Eigen::Map<const Eigen::VectorXd>(f.data() + p * m, m));
      fp_.push_back(Eigen::Map<const Eigen::VectorXd>(fp.data() + p * m, m));
    }
    R_max_ = breaks_.back();
  }

  ProfileDerivs eval(double rho) const override {
    ProfileDerivs d;
    const double rs = s0_.radius;
    if (rho <= rs) {
      d.f = s0_.eval(rho, 0);
      d.f1 = s0_.eval(rho, 1);
      d.f2 = s0_.eval(rho, 2);
      d.f3 = s0_.eval(rho, 3);
      d.u = s0_.eval_over_rho(rho, 0);
      d.u1 = s0_.eval_over_rho(rho, 1);
      d.u2 = s0_.eval_over_rho(rho, 2);
      return d;
    }
    if (std::abs(rho - 1.0) <= s1_.radius) {
      d.f = s1_.eval(rho, 0);
      d.f1 = s1_.eval(rho, 1);
      d.f2 = s1_.eval(rho, 2);
      d.f3 = s1_.eval(rho, 3);
      fill_u(d, rho);
      return d;
    }
    if (rho > R_max_) {
      d.f = sinf_.eval(rho, 0);
      d.f1 = sinf_.eval(rho, 1);
      d.f2 = sinf_.eval(rho, 2);
      d.f3 = sinf_.eval(rho, 3);
      fill_u(d, rho);
      return d;
    }
    const std::size_t p = piece(rho);
    d.f = barycentric(nodes_[p], f_[p], rho);
    d.f1 = barycentric(nodes_[p], fp_[p], rho);
    d.f2 = second_derivative(t_, rho, d.f, d.f1);
    d.f3 = third_derivative(t_, rho, d.f, d.f1, d.f2);
    fill_u(d, rho);
    return d;
  }

  std::size_t piece(double rho) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), rho);
    std::size_t p = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
    // skip the light-cone gap between the interior and exterior pieces
    if (p + 1 >= breaks_.size()) p = breaks_.size() - 2;
    return p;
  }

  // Residual at every node with f'' from spectral differentiation of the f' data.
  double residual() const {
    double r = 0.0;
    for (std::size_t p = 0; p < nodes_.size(); ++p) {
      if (breaks_[p + 1] - breaks_[p] <= 0.0 || (breaks_[p] < 1.0 && breaks_[p + 1] > 1.0)) continue;
      const Eigen::MatrixXd D = chebyshev_matrix(order_, breaks_[p], breaks_[p + 1]);
      const Eigen::VectorXd f2 = D * fp_[p];
      for (int j = 0; j <= order_; ++j)
        r = std::max(r, std::abs(residual_f(t_, nodes_[p][j], f_[p][j], fp_[p][j], f2[j])));
    }
    return r;
  }

 private:
  WarpedTarget t_;
  FrobeniusSeries s0_, s1_, sinf_;
  std::vector<double> breaks_;
  int order_;
  std::vector<std::vector<double>> nodes_;
  std::vector<Eigen::VectorXd> f_, fp_;
  double R_max_ = 0.0;
};

class ChebyshevCurve final : public ProfileCurve {
 public:
  ChebyshevCurve(std::vector<double> y, std::vector<double> u) : y_(std::move(y)) {
    const int N = static_cast<int>(y_.size()) - 1;
    const Eigen::MatrixXd D = chebyshev_matrix(N, 0.0, 1.0);
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), u.size());
    du_[0] = uv;
    for (int k = 1; k < 4; ++k) du_[k] = D * du_[k - 1];
  }

  ProfileDerivs eval(double rho) const override {
    const double y = rho / (1.0 + rho), s = 1.0 - y;
    double u[4];
    for (int k = 0; k < 4; ++k) u[k] = barycentric(y_, du_[k], y);
    ProfileDerivs d;
    d.u = u[0];
    d.u1 = s * s * u[1];
    d.u2 = std::pow(s, 4) * u[2] - 2.0 * std::pow(s, 3) * u[1];
    const double u3 = std::pow(s, 6) * u[3] - 6.0 * std::pow(s, 5) * u[2] + 6.0 * std::pow(s, 4) * u[1];
    d.f = rho * d.u;
    d.f1 = d.u + rho * d.u1;
    d.f2 = 2.0 * d.u1 + rho * d.u2;
    d.f3 = 3.0 * d.u2 + rho * u3;
    return d;
  }

  const Eigen::VectorXd& derivative(int k) const { return du_[k]; }

 private:
  std::vector<double> y_;
  Eigen::VectorXd du_[4];
};

double G(const WarpedTarget& t, double f, int k = 0) { return t.ww_poly().eval(f, k); }

}  // namespace

double FrobeniusSeries::eval(double rho, int k) const {
  if (center == Center::Infinity) {
    const double s = 1.0 / rho;
    double r = 0.0;
    for (int i = static_cast<int>(coef.size()) - 1; i >= 0; --i) {
      double p = 1.0;
      for (int m = 0; m < k; ++m) p *= (i + m);
      r = r * s + coef[i] * p;
    }
    return (k % 2 ? -1.0 : 1.0) * r * std::pow(s, k);
  }
  const double t = center == Center::Origin ? rho : rho - 1.0;
  return horner_deriv(coef, t, k);
}

double FrobeniusSeries::eval_over_rho(double rho, int k) const {
  double r = 0.0;
  for (int i = static_cast<int>(coef.size()) - 1; i >= 1 + k; --i) r = r * rho + coef[i] * falling(i - 1, k);
  return r;
}

FrobeniusSeries series_at_origin(const WarpedTarget& target, double b, int order) {
  if (order > kSeriesCap) throw UnsupportedOrder("series order exceeds cap");
  const int d = target.d();
  FrobeniusSeries s;
  s.center = FrobeniusSeries::Center::Origin;
  s.coef.assign(order + 1, 0.0);
  s.free = {1};
  if (order >= 1) s.coef[1] = b;
  const double g1 = G(target, 0.0, 1);
  SineComposer comp(target.ww_poly(), 0.0);
  if (order >= 1) comp.push(b);
  for (int j = 2; j <= order; ++j) {
    if (j % 2 == 0) {
      comp.push(0.0);
      continue;
    }
    comp.push(0.0);
    const double rest = comp.coefficient(j);
    comp.pop();
    const double mult = j * (j - 1.0) + (d - 1.0) * j - (d - 1.0) * g1;
    const double v = (s.coef[j - 2] * (j - 2.0) * (j - 1.0) + (d - 1.0) * rest) / mult;
    if (!std::isfinite(v) || std::abs(v) * std::pow(0.2, j) > 1e30)
      throw DivergedSeries("origin series coefficient overflow at order " + std::to_string(j));
    s.coef[j] = v;
    comp.push(v);
  }
  return s;
}

int lightcone_resonance(int d) { return (d % 2 == 1) ? (d - 1) / 2 : -1; }

FrobeniusSeries series_at_lightcone(const WarpedTarget& target, double a, int order,
                                    double free_coef) {
  if (order > kSeriesCap) throw UnsupportedOrder("series order exceeds cap");
  const int d = target.d();
  static const double P2[5] = {0.0, -2.0, -5.0, -4.0, -1.0};
  const double P1[4] = {d - 3.0, d - 7.0, -6.0, -2.0};
  FrobeniusSeries s;
  s.center = FrobeniusSeries::Center::LightCone;
  s.coef.assign(order + 1, 0.0);
  s.coef[0] = a;
  s.resonance = lightcone_resonance(d);
  s.free = {0};
  if (s.resonance > 0) s.free = {s.resonance};
  auto& f = s.coef;
  SineComposer comp(target.ww_poly(), a);
  for (int j = 0; j + 1 <= order; ++j) {
    double rest = -(d - 1.0) * comp.coefficient(j);
    for (int p = 2; p <= 4; ++p) {
      const int i = j - p + 2;
      if (i >= 2) rest += P2[p] * i * (i - 1.0) * f[i];
    }
    for (int p = 1; p <= 3; ++p) {
      const int i = j - p + 1;
      if (i >= 1) rest += P1[p] * i * f[i];
    }
    const int k = j + 1;
    const double mult = k * (d - 1.0 - 2.0 * k);
    if (k == s.resonance) {
      s.compat_residual = rest;
      f[k] = free_coef;
    } else {
      f[k] = -rest / mult;
    }
    if (!std::isfinite(f[k]) || std::abs(f[k]) * std::pow(0.2, k) > 1e30)
      throw DivergedSeries("light-cone series coefficient overflow at order " + std::to_string(k));
    comp.push(f[k]);
  }
  return s;
}

FrobeniusSeries series_at_lightcone_checked(const WarpedTarget& target, double a, int order,
                                            double free_coef, double tol) {
  auto s = series_at_lightcone(target, a, order, free_coef);
  if (std::abs(s.compat_residual) > tol)
    throw NoAnalyticBranch("light-cone compatibility violated: residual " +
                           std::to_string(s.compat_residual));
  return s;
}

FrobeniusSeries series_at_infinity(const WarpedTarget& target, double c1, double c2, int order) {
  const int n = target.n();
  std::vector<double> u(order + 2, 0.0);
  u[1] = c1;
  if (order + 1 >= 2) u[2] = c2;
  SineComposer comp(target.eta_poly(), c1);
  for (int k = 3; k <= order + 1; ++k) {
    const double e = comp.coefficient(k - 3);
    u[k] = ((k - 2.0) * (k - n) * u[k - 2] + (n - 3.0) * e) / ((k - 1.0) * (k - 2.0));
    comp.push(u[k - 1]);
  }
  FrobeniusSeries s;
  s.center = FrobeniusSeries::Center::Infinity;
  s.coef.assign(u.begin() + 1, u.end());
  s.free = {0, 1};
  s.radius = 0.0;
  return s;
}

double solve_lightcone_value(const WarpedTarget& target, double guess, int order) {
  if (lightcone_resonance(target.d()) < 0) return guess;
  auto C = [&](double a) { return series_at_lightcone(target, a, order).compat_residual; };
  double x0 = guess, x1 = guess + 1e-4;
  double f0 = C(x0), f1 = C(x1);
  for (int it = 0; it < 60; ++it) {
    if (f0 == 0.0) return x0;
    if (f1 == f0) break;
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1, f0 = f1;
    x1 = x2, f1 = C(x1);
    if (std::abs(x1 - x0) < 1e-15 * (1.0 + std::abs(x1))) return x1;
  }
  if (std::abs(f1) < 1e-13) return x1;
  throw NoAnalyticBranch("no light-cone value satisfies the compatibility condition");
}

double residual_f(const WarpedTarget& t, double rho, double f, double fp, double fpp) {
  const int d = t.d();
  return (1.0 - rho * rho) * fpp + ((d - 1.0) / rho - 2.0 * rho) * fp -
         (d - 1.0) / (rho * rho) * G(t, f);
}

double residual_u(const WarpedTarget& t, double rho, double u, double up, double upp) {
  const int n = t.n();
  return (1.0 - rho * rho) * upp + ((n - 1.0) / rho - 4.0 * rho) * up - 2.0 * u +
         (n - 3.0) * u * u * u * t.eta_over_cube(rho * u);
}

double second_derivative(const WarpedTarget& t, double rho, double f, double fp) {
  const int d = t.d();
  return ((d - 1.0) / (rho * rho) * G(t, f) - ((d - 1.0) / rho - 2.0 * rho) * fp) / (1.0 - rho * rho);
}

double third_derivative(const WarpedTarget& t, double rho, double f, double fp, double fpp) {
  const int d = t.d();
  const double r2 = rho * rho;
  const double num = 2.0 * rho * fpp - ((d - 1.0) / rho - 2.0 * rho) * fpp +
                     ((d - 1.0) / r2 + 2.0) * fp +
                     (d - 1.0) * (-2.0 / (r2 * rho) * G(t, f) + G(t, f, 1) * fp / r2);
  return num / (1.0 - r2);
}

double ground_state(int d, double rho, int k) {
  const double s = std::sqrt(d - 2.0), q = s * s + rho * rho;
  switch (k) {
    case 0: return 2.0 * std::atan(rho / s);
    case 1: return 2.0 * s / q;
    case 2: return -4.0 * s * rho / (q * q);
    case 3: return 4.0 * s * (3.0 * rho * rho - s * s) / (q * q * q);
    default: throw UnsupportedOrder("ground_state derivative order > 3");
  }
}

ShootParams ground_state_params(int d, int order) {
  const double s = std::sqrt(d - 2.0);
  ShootParams p;
  p.b = 2.0 / s;
  p.a = 2.0 * std::atan(1.0 / s);
  const int kr = lightcone_resonance(d);
  if (kr > 0) {
    // f0'(1 + t) = 2 s / ((s^2 + 1) + 2 t + t^2), expanded by series division
    const double p0 = s * s + 1.0;
    std::vector<double> q(std::max(order, kr) + 1, 0.0);
    q[0] = 1.0 / p0;
    for (std::size_t j = 1; j < q.size(); ++j) {
      double acc = 2.0 * q[j - 1];
      if (j >= 2) acc += q[j - 2];
      q[j] = -acc / p0;
    }
    p.c = 2.0 * s * q[kr - 1] / kr;
  }
  return p;
}

std::array<double, 2> shoot_interior(const WarpedTarget& target, const ShootParams& p,
                                     const ProfileConfig& cfg) {
  const double rs = cfg.rho_series, rm = cfg.rho_match;
  const auto s0 = series_at_origin(target, p.b, cfg.series_order);
  const auto s1 = series_at_lightcone(target, p.a, cfg.series_order, p.c);
  State xl{s0.eval(rs, 0), s0.eval(rs, 1)};
  State xr{s1.eval(1.0 - rs, 0), s1.eval(1.0 - rs, 1)};
  try {
    xl = integrate(target, xl, rs, rm, cfg.ode_tol);
    xr = integrate(target, xr, 1.0 - rs, rm, cfg.ode_tol);
  } catch (const std::exception& e) {
    throw NonConvergence(std::string("interior integration failed: ") + e.what());
  }
  if (!std::isfinite(xl[0] + xl[1] + xr[0] + xr[1]))
    throw NonConvergence("interior integration produced non-finite state");
  return {xl[0] - xr[0], xl[1] - xr[1]};
}

namespace {

bool odd_d(const WarpedTarget& t) { return lightcone_resonance(t.d()) > 0; }

ShootParams newton_shoot(const WarpedTarget& target, ShootParams p, const ProfileConfig& cfg,
                         int* iterations) {
  const bool odd = odd_d(target);
  if (odd) p.a = solve_lightcone_value(target, p.a, cfg.series_order);
  auto pack = [&](const ShootParams& q) { return Eigen::Vector2d(q.b, odd ? q.c : q.a); };
  auto unpack = [&](const Eigen::Vector2d& x) {
    ShootParams q = p;
    q.b = x[0];
    (odd ? q.c : q.a) = x[1];
    return q;
  };
  auto F = [&](const Eigen::Vector2d& x) {
    const auto m = shoot_interior(target, unpack(x), cfg);
    return Eigen::Vector2d(m[0], m[1]);
  };
  Eigen::Vector2d x = pack(p), r = F(x);
  int it = 0;
  for (; it < cfg.newton_max && r.lpNorm<Eigen::Infinity>() > cfg.newton_tol; ++it) {
    Eigen::Matrix2d J;
    for (int k = 0; k < 2; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
      Eigen::Vector2d xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      J.col(k) = (F(xp) - F(xm)) / (2.0 * h);
    }
    const Eigen::Vector2d dx = -J.fullPivLu().solve(r);
    double lam = 1.0;
    Eigen::Vector2d xn, rn;
    for (int ls = 0; ls < 12; ++ls, lam *= 0.5) {
      xn = x + lam * dx;
      try {
        rn = F(xn);
      } catch (const NonConvergence&) {
        continue;
      }
      if (rn.lpNorm<Eigen::Infinity>() < r.lpNorm<Eigen::Infinity>() || ls == 11) break;
    }
    if (!std::isfinite(rn.sum())) throw NonConvergence("Newton step left the domain");
    const bool stalled = (xn - x).lpNorm<Eigen::Infinity>() < 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>());
    x = xn, r = rn;
    if (stalled) break;
  }
  if (iterations) *iterations = it;
  // Integration noise sets a floor slightly above the target on some targets.
  if (!(r.lpNorm<Eigen::Infinity>() <= std::max(cfg.newton_tol, 1e-11)))
    throw NonConvergence("shooting Newton stagnated at mismatch " +
                         std::to_string(r.lpNorm<Eigen::Infinity>()) + "; try a smaller epsilon step");
  p = unpack(x);
  if (std::abs(p.b) < 1e-8) throw DegenerateProfile("profile slope at origin vanishes");
  return p;
}

double profile_residual(const WarpedTarget& t, const SampledCurve& curve, const FrobeniusSeries& s0,
                        const FrobeniusSeries& s1) {
  double res = curve.residual();
  const int m = 40;
  for (int i = 1; i <= m; ++i) {
    const double x = s0.radius * i / m;
    res = std::max(res, std::abs(residual_f(t, x, s0.eval(x), s0.eval(x, 1), s0.eval(x, 2))));
    const double y = 1.0 - s1.radius + 2.0 * s1.radius * (i - 0.5) / m;
    res = std::max(res, std::abs(residual_f(t, y, s1.eval(y), s1.eval(y, 1), s1.eval(y, 2))));
  }
  return res;
}

ProfileSolution build_solution(const WarpedTarget& target, const ShootParams& p,
                               const ProfileConfig& cfg) {
  const double rs = cfg.rho_series, rm = cfg.rho_match;
  ProfileSolution sol;
  sol.target = target;
  sol.method = "shooting";
  sol.b = p.b, sol.a = p.a, sol.c = p.c;
  sol.R_max = cfg.R_max;
  sol.eps_reached = target.epsilon();
  sol.series0 = series_at_origin(target, p.b, cfg.series_order);
  sol.series0.radius = rs;
  sol.series1 = series_at_lightcone(target, p.a, cfg.series_order, p.c);
  sol.series1.radius = rs;

  // Pieces [rs, rm] and [rm, 1 - rs] integrated from their own series, then dyadic pieces outside.
  const double r0 = 1.0 + rs;
  std::vector<double> left_breaks, right_breaks, ext_breaks;
  const int half = std::max(1, cfg.interior_pieces / 2);
  for (int i = 0; i <= half; ++i) left_breaks.push_back(rs + (rm - rs) * i / half);
  for (int i = 0; i <= half; ++i) right_breaks.push_back(rm + (1.0 - rs - rm) * i / half);
  for (double r = r0; r < cfg.R_max * (1.0 - 1e-12); r *= cfg.exterior_ratio) ext_breaks.push_back(r);
  ext_breaks.push_back(cfg.R_max);
  if (ext_breaks.size() >= 3 && ext_breaks.back() - ext_breaks[ext_breaks.size() - 2] < 0.25 * ext_breaks.back())
    ext_breaks.erase(ext_breaks.end() - 2);

  const int N = cfg.piece_order;
  auto sample = [&](const std::vector<double>& br, State start, double from, bool backward) {
    std::vector<double> nodes{from};
    std::vector<std::pair<std::size_t, int>> where;  // (piece, node index)
    const std::size_t pieces = br.size() - 1;
    for (std::size_t pp = 0; pp < pieces; ++pp) {
      const std::size_t p = backward ? pieces - 1 - pp : pp;
      const Eigen::VectorXd x = chebyshev_nodes(N, br[p], br[p + 1]);
      for (int jj = 0; jj <= N; ++jj) {
        const int j = backward ? jj : N - jj;  // node 0 is the right end
        nodes.push_back(x[j]);
        where.emplace_back(p, j);
      }
    }
    const auto st = integrate_nodes(target, start, nodes, cfg.ode_tol);
    std::vector<double> F(pieces * (N + 1)), Fp(pieces * (N + 1));
    for (std::size_t k = 0; k < where.size(); ++k) {
      const auto [p, j] = where[k];
      F[p * (N + 1) + j] = st[k + 1][0];
      Fp[p * (N + 1) + j] = st[k + 1][1];
    }
    return std::make_pair(F, Fp);
  };
  const auto L = sample(left_breaks, {sol.series0.eval(rs), sol.series0.eval(rs, 1)}, rs, false);
  const auto Rr = sample(right_breaks, {sol.series1.eval(1 - rs), sol.series1.eval(1 - rs, 1)}, 1 - rs, true);
  const auto E = sample(ext_breaks, {sol.series1.eval(r0), sol.series1.eval(r0, 1)}, r0, false);

  sol.breaks = left_breaks;
  sol.breaks.insert(sol.breaks.end(), right_breaks.begin() + 1, right_breaks.end());
  sol.breaks.insert(sol.breaks.end(), ext_breaks.begin(), ext_breaks.end());  // gap piece [1-rs, 1+rs]
  sol.piece_order = N;
  std::vector<double> gapf(N + 1, 0.0);
  for (const auto* part : {&L, &Rr}) {
    sol.f.insert(sol.f.end(), part->first.begin(), part->first.end());
    sol.fp.insert(sol.fp.end(), part->second.begin(), part->second.end());
  }
  sol.f.insert(sol.f.end(), gapf.begin(), gapf.end());
  sol.fp.insert(sol.fp.end(), gapf.begin(), gapf.end());
  sol.f.insert(sol.f.end(), E.first.begin(), E.first.end());
  sol.fp.insert(sol.fp.end(), E.second.begin(), E.second.end());
  for (std::size_t p = 0; p + 1 < sol.breaks.size(); ++p) {
    const Eigen::VectorXd x = chebyshev_nodes(N, sol.breaks[p], sol.breaks[p + 1]);
    sol.grid.insert(sol.grid.end(), x.data(), x.data() + x.size());
  }

  // Richardson on g(rho) = C + A/rho + B/rho^2 at R/4, R/2, R.
  auto richardson = [&](auto&& g) {
    Eigen::Matrix3d M;
    Eigen::Vector3d v;
    const double pts[3] = {cfg.R_max / 4, cfg.R_max / 2, cfg.R_max};
    for (int i = 0; i < 3; ++i) {
      const double r = pts[i];
      const State x = integrate(target, {sol.series1.eval(r0), sol.series1.eval(r0, 1)}, r0, r, cfg.ode_tol);
      M.row(i) << 1.0, 1.0 / r, 1.0 / (r * r);
      v[i] = g(r, x);
    }
    return M.fullPivLu().solve(v)[0];
  };
  sol.c1_richardson = richardson([](double, const State& x) { return x[0]; });
  sol.ctilde1_richardson = richardson([](double r, const State& x) { return r * r * x[1]; });

  // Match the series at infinity to (f, f') at R_max.
  const double R = cfg.R_max;
  const std::size_t last = sol.f.size() - 1 - N;  // node 0 of the last piece is its right end
  const double fR = sol.f[last], fpR = sol.fp[last];
  Eigen::Vector2d c(sol.c1_richardson, -sol.ctilde1_richardson);
  const int inf_order = 40;
  auto mis = [&](const Eigen::Vector2d& q) {
    const auto s = series_at_infinity(target, q[0], q[1], inf_order);
    return Eigen::Vector2d(s.eval(R) - fR, s.eval(R, 1) - fpR);
  };
  for (int it = 0; it < 10; ++it) {
    const Eigen::Vector2d r = mis(c);
    Eigen::Matrix2d J;
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d cp = c;
      cp[k] += 1e-6;
      J.col(k) = (mis(cp) - r) / 1e-6;
    }
    const Eigen::Vector2d dc = -J.fullPivLu().solve(r);
    c += dc;
    if (dc.lpNorm<Eigen::Infinity>() < 1e-15) break;
  }
  sol.series_inf = series_at_infinity(target, c[0], c[1], inf_order);
  sol.c1 = c[0];
  sol.ctilde1 = -c[1];

  auto curve = std::make_shared<SampledCurve>(target, sol.series0, sol.series1, sol.series_inf, sol.breaks,
                                              sol.piece_order, sol.f, sol.fp);
  sol.residual_norm = profile_residual(target, *curve, sol.series0, sol.series1);
  sol.curve = curve;
  if (!(sol.residual_norm <= cfg.residual_tol))
    throw NonConvergence("profile residual " + std::to_string(sol.residual_norm*1e12) + "e-12 above tolerance");
  return sol;
}

}  // namespace

ProfileSolution solve_profile_from(const WarpedTarget& target, ShootParams seed,
                                   const ProfileConfig& cfg) {
  int it = 0;
  const auto p = newton_shoot(target, seed, cfg, &it);
  auto sol = build_solution(target, p, cfg);
  sol.iterations = it;
  return sol;
}

ProfileSolution solve_profile(const WarpedTarget& target, const ProfileConfig& cfg) {
  ShootParams p = ground_state_params(target.d(), cfg.series_order);
  const double goal = target.epsilon();
  double e = 0.0, step = cfg.continuation_step;
  int total = 0, it = 0;
  ShootParams prev = p;
  double e_prev = 0.0;
  bool have_prev = false;
  if (goal == 0.0) {
    p = newton_shoot(target, p, cfg, &it);
    total += it;
  }
  while (e != goal) {
    const double next = std::abs(goal - e) <= step ? goal : e + std::copysign(step, goal - e);
    ShootParams seed = p;
    if (have_prev) {  // secant predictor along the branch
      const double s = (next - e) / (e - e_prev);
      seed.b += s * (p.b - prev.b);
      seed.a += s * (p.a - prev.a);
      seed.c += s * (p.c - prev.c);
    }
    try {
      const auto q = newton_shoot(target.with_epsilon(next), seed, cfg, &it);
      total += it;
      prev = p, e_prev = e, have_prev = true;
      p = q, e = next;
    } catch (const NonConvergence&) {
      step *= 0.5;
      if (step < cfg.min_step)
        throw NonConvergence("continuation stalled at eps = " + std::to_string(e) +
                             "; reduce the continuation step");
    }
  }
  auto sol = build_solution(target, p, cfg);
  sol.iterations = total;
  return sol;
}

ProfileSolution newton_collocation(const WarpedTarget& target,
                                   const std::function<double(double)>& f_guess,
                                   const CollocationConfig& cfg) {
  const int N = cfg.N, n = target.n();
  const Eigen::VectorXd y = chebyshev_nodes(N, 0.0, 1.0);
  const Eigen::MatrixXd D = chebyshev_matrix(N, 0.0, 1.0), D2 = D * D;
  Eigen::VectorXd A(N + 1), B(N + 1), C(N + 1), rho(N + 1);
  for (int j = 0; j <= N; ++j) {
    const double yy = y[j], s = 1.0 - yy;
    A[j] = yy * s * s * (1.0 - 2.0 * yy);
    B[j] = -2.0 * yy * s * (1.0 - 2.0 * yy) + (n - 1.0) * s * s * s - 4.0 * yy * yy * s;
    C[j] = -2.0 * yy;
    rho[j] = s > 0.0 ? yy / s : std::numeric_limits<double>::infinity();
  }
  auto residual = [&](const WarpedTarget& t, const Eigen::VectorXd& u, Eigen::VectorXd* jac_diag) {
    Eigen::VectorXd r = A.cwiseProduct(D2 * u) + B.cwiseProduct(D * u) + C.cwiseProduct(u);
    if (jac_diag) *jac_diag = C;
    for (int j = 0; j <= N; ++j) {
      if (!std::isfinite(rho[j])) continue;
      const double x = rho[j] * u[j];
      r[j] += y[j] * (n - 3.0) * u[j] * u[j] * u[j] * t.eta_over_cube(x);
      if (jac_diag) (*jac_diag)[j] += y[j] * (n - 3.0) * u[j] * u[j] * t.etap_over_square(x);
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& diag) {
    Eigen::MatrixXd J = A.asDiagonal() * D2 + B.asDiagonal() * D;
    J.diagonal() += diag;
    return J;
  };

  Eigen::VectorXd u(N + 1);
  for (int j = 0; j <= N; ++j) {
    if (!std::isfinite(rho[j])) u[j] = 0.0;
    else if (rho[j] == 0.0) u[j] = f_guess(1e-7) / 1e-7;
    else u[j] = f_guess(rho[j]) / rho[j];
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu0;
  if (cfg.picard) {
    const WarpedTarget t0 = target.with_epsilon(0.0);
    Eigen::VectorXd u0(N + 1);
    for (int j = 0; j <= N; ++j)
      u0[j] = !std::isfinite(rho[j]) ? 0.0 : rho[j] == 0.0 ? ground_state(target.d(), 0.0, 1)
                                                          : ground_state(target.d(), rho[j]) / rho[j];
    Eigen::VectorXd diag;
    residual(t0, u0, &diag);
    lu0.compute(jacobian(diag));
  }

  int it = 0, growth = 0;
  double rnorm = std::numeric_limits<double>::infinity(), prev = rnorm;
  for (;; ++it) {
    Eigen::VectorXd diag;
    const Eigen::VectorXd r = residual(target, u, &diag);
    rnorm = r.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(rnorm)) throw NonConvergence("collocation residual is not finite");
    // converged, or stalled at the roundoff floor of the discretization
    if (rnorm <= cfg.tol || (rnorm <= 1e-10 && rnorm > 0.5 * prev) || it >= cfg.max_iter) break;
    Eigen::VectorXd du;
    if (cfg.picard) {
      if (rnorm > prev && ++growth >= 3)
        throw ContractionFailure("frozen-linearization iteration is not contracting");
      du = lu0.solve(r);
    } else {
      const Eigen::MatrixXd J = jacobian(diag);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
      if (lu.rcond() < 1e-15) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(J, false);
        double smallest = std::numeric_limits<double>::infinity();
        for (int k = 0; k < es.eigenvalues().size(); ++k) smallest = std::min(smallest, std::abs(es.eigenvalues()[k]));
        throw SingularJacobian("collocation Jacobian is singular", smallest);
      }
      du = lu.solve(r);
    }
    prev = rnorm;
    u -= du;
  }
  if (!(rnorm <= 1e-10))
    throw NonConvergence("collocation did not converge: residual " + std::to_string(rnorm));

  ProfileSolution sol;
  sol.target = target;
  sol.method = cfg.picard ? "collocation-picard" : "collocation";
  sol.iterations = it;
  sol.residual_norm = rnorm;
  sol.eps_reached = target.epsilon();
  sol.y_nodes.assign(y.data(), y.data() + y.size());
  sol.u_nodes.assign(u.data(), u.data() + u.size());
  auto curve = std::make_shared<ChebyshevCurve>(sol.y_nodes, sol.u_nodes);
  const Eigen::VectorXd& u1 = curve->derivative(1);
  const Eigen::VectorXd& u2 = curve->derivative(2);
  // Node 0 is y = 1 (rho = infinity) and node N is y = 0.
  sol.c1 = -u1[0];
  sol.ctilde1 = sol.c1 - 0.5 * u2[0];
  sol.curve = curve;
  sol.b = u[N];
  sol.a = sol.value(1.0);
  for (int j = N; j >= 1; --j) {
    sol.grid.push_back(rho[j]);
    sol.f.push_back(rho[j] * u[j]);
    sol.fp.push_back(sol.eval(rho[j]).f1);
  }
  sol.R_max = std::numeric_limits<double>::infinity();
  if (std::abs(sol.b) < 1e-8) throw DegenerateProfile("profile slope at origin vanishes");
  return sol;
}

void rebuild_curve(ProfileSolution& sol) {
  if (sol.method.rfind("collocation", 0) == 0) {
    sol.curve = std::make_shared<ChebyshevCurve>(sol.y_nodes, sol.u_nodes);
    return;
  }
  sol.curve = std::make_shared<SampledCurve>(sol.target, sol.series0, sol.series1, sol.series_inf, sol.breaks,
                                             sol.piece_order, sol.f, sol.fp);
}

double ProfileSolution::psi1(double rho, int k) const {
  const auto d = curve->eval(rho);
  return k == 0 ? d.u : k == 1 ? d.u1 : d.u2;
}

double ProfileSolution::psi2(double rho, int k) const {
  const auto d = curve->eval(rho);
  return k == 0 ? d.f1 : k == 1 ? d.f2 : d.f3;
}

LipschitzReport lipschitz_in_epsilon(const std::vector<ProfileSolution>& profiles,
                                     const std::vector<double>& rho_grid) {
  LipschitzReport rep;
  for (std::size_t i = 0; i < profiles.size(); ++i)
    for (std::size_t j = i + 1; j < profiles.size(); ++j) {
      const auto& P = profiles[i];
      const auto& Q = profiles[j];
      const double de = P.target.epsilon() - Q.target.epsilon();
      if (de == 0.0) continue;
      LipschitzEntry e;
      e.eps = P.target.epsilon();
      e.kappa = Q.target.epsilon();
      for (double r : rho_grid) {
        const auto a = P.eval(r), b = Q.eval(r);
        e.sup[0] = std::max(e.sup[0], std::abs((a.u - b.u) / de));
        e.sup[1] = std::max(e.sup[1], std::abs((a.u1 - b.u1) / de));
        e.sup[2] = std::max(e.sup[2], std::abs((a.u2 - b.u2) / de));
      }
      for (int k = 0; k < 3; ++k) rep.max[k] = std::max(rep.max[k], e.sup[k]);
      rep.pairs.push_back(e);
    }
  return rep;
}

}  // namespace wml
