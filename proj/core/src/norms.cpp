#include "wml/norms.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numeric>

#include "wml/errors.hpp"

namespace wml {

namespace {

// Fornberg's algorithm: weights c[k][j] for the k-th derivative at z from nodes x.
std::vector<std::vector<double>> fornberg(double z, const std::vector<double>& x, int m) {
  const int np = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(np, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < np; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

double uniform_spacing(const RadialField& f) {
  if (f.rho.size() < 8 || f.rho.size() != f.v.size()) throw ValidationError("field needs at least 8 samples");
  if (f.rho.front() != 0.0) throw ValidationError("field grid must start at rho = 0");
  const double h = f.rho[1];
  for (std::size_t i = 1; i < f.rho.size(); ++i)
    if (std::abs(f.rho[i] - i * h) > 1e-9 * h * i) throw ValidationError("field grid must be uniform");
  return h;
}

// End corrections c_i added to the trapezoid weights: sum_i c_i i^q = B_{q+1}/(q+1) for odd q, 0 for even q.
const std::vector<double>& gregory_corrections() {
  static const std::vector<double> c = [] {
    constexpr int m = 8;
    Eigen::Matrix<long double, m, m> A;
    Eigen::Matrix<long double, m, 1> rhs;
    const long double bern[] = {1.0L / 6, -1.0L / 30, 1.0L / 42, -1.0L / 30};  // B2, B4, B6, B8
    for (int q = 0; q < m; ++q) {
      for (int i = 0; i < m; ++i) A(q, i) = std::pow(static_cast<long double>(i), q);
      rhs[q] = (q % 2 == 1) ? bern[(q - 1) / 2] / (q + 1) : 0.0L;
    }
    const Eigen::Matrix<long double, m, 1> sol = A.fullPivLu().solve(rhs);
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) out[i] = static_cast<double>(sol[i]);
    return out;
  }();
  return c;
}

RadialField every_other(const RadialField& f) {
  RadialField g = f;
  g.rho.clear();
  g.v.clear();
  for (std::size_t i = 0; i < f.rho.size(); i += 2) {
    g.rho.push_back(f.rho[i]);
    g.v.push_back(f.v[i]);
  }
  return g;
}

double seminorm_value(const RadialField& field, int j, int n, int stencil) {
  const double h = uniform_spacing(field);
  const std::size_t M = field.v.size();
  std::vector<double> content(M);
  if (j <= 1) {
    const auto d = radial_derivatives(field, j, stencil);
    for (std::size_t i = 0; i < M; ++i) content[i] = d[j][i] * d[j][i];
  } else if (j == 2) {
    const auto d = radial_derivatives(field, 2, stencil);
    for (std::size_t i = 0; i < M; ++i) {
      const double q = i == 0 ? d[2][0] : d[1][i] / field.rho[i];
      content[i] = d[2][i] * d[2][i] + (n - 1.0) * q * q;
    }
  } else {
    // |D^(2k) u| -> |Delta^k u|, |D^(2k+1) u| -> |(Delta^k u)'|; equal after integration over R^n.
    RadialField g = field;
    for (int k = 0; k < j / 2; ++k) {
      const auto d = radial_derivatives(g, 2, stencil);
      for (std::size_t i = 0; i < M; ++i)
        g.v[i] = i == 0 ? n * d[2][0] : d[2][i] + (n - 1.0) * d[1][i] / g.rho[i];
    }
    if (j % 2 == 1) {
      const auto d = radial_derivatives(g, 1, stencil);
      g.v = d[1];
    }
    for (std::size_t i = 0; i < M; ++i) content[i] = g.v[i] * g.v[i];
  }
  for (std::size_t i = 0; i < M; ++i) content[i] *= std::pow(field.rho[i], n - 1);
  return std::sqrt(std::max(0.0, gregory_integral(content, h)));
}

// J_nu(z) / z^nu, continuous at z = 0.
double bessel_scaled(double nu, double z) {
  if (z < 1e-6) return (1.0 - z * z / (4.0 * (nu + 1.0))) / (std::pow(2.0, nu) * std::tgamma(nu + 1.0));
  return std::cyl_bessel_j(nu, z) / std::pow(z, nu);
}

}  // namespace

void NormSpec::validate(int n) const {
  for (int j : orders)
    if (j < 0 || j > k_cap) throw ValidationError("norm order outside [0, k_cap]");
  if (k_cap > 4) throw ValidationError("orders above 4 are not supported by the grid stencils");
  if (stencil < 5 || stencil % 2 == 0) throw ValidationError("stencil width must be odd and at least 5");
  if (s && !(*s > n / 2.0 - 1.0 && *s < n / 2.0)) throw ValidationError("fractional order outside (n/2-1, n/2)");
}

std::vector<std::vector<double>> radial_derivatives(const RadialField& field, int order, int stencil) {
  const double h = uniform_spacing(field);
  const int M = static_cast<int>(field.v.size());
  const int half = stencil / 2;
  if (M < stencil) throw ValidationError("grid shorter than stencil");
  const double sign = field.parity == Parity::Even ? 1.0 : -1.0;
  std::vector<std::vector<double>> out(order + 1, std::vector<double>(M, 0.0));
  out[0] = field.v;
  // Stencil offsets depend only on the distance to the outer end, so weights are cached per shift.
  std::vector<std::vector<std::vector<double>>> cache(half + 1);
  for (int i = 0; i < M; ++i) {
    const int shift = std::max(0, i + half - (M - 1));
    auto& w = cache[shift];
    if (w.empty()) {
      std::vector<double> x(stencil);
      for (int k = 0; k < stencil; ++k) x[k] = k - half - shift;
      w = fornberg(0.0, x, order);
    }
    for (int k = 0; k < stencil; ++k) {
      const int idx = i + k - half - shift;
      const double val = idx >= 0 ? field.v[idx] : sign * field.v[-idx];
      for (int m = 1; m <= order; ++m) out[m][i] += w[m][k] * val;
    }
  }
  for (int m = 1; m <= order; ++m)
    for (auto& v : out[m]) v /= std::pow(h, m);
  return out;
}

double gregory_integral(const std::vector<double>& f, double h) {
  const std::size_t M = f.size();
  if (M < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < M; ++i) s += f[i];
  const auto& c = gregory_corrections();
  if (M >= 2 * c.size())
    for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * (f[i] + f[M - 1 - i]);
  return h * s;
}

NormValue sobolev_seminorm(const RadialField& field, int j, int n, int stencil) {
  if (j < 0 || j > 4) throw ValidationError("seminorm order must lie in [0, 4]");
  NormValue out;
  out.value = seminorm_value(field, j, n, stencil);
  if (field.v.size() >= 8 * static_cast<std::size_t>(stencil)) {
    const double coarse = seminorm_value(every_other(field), j, n, stencil);
    out.warning = std::abs(coarse - out.value) > 1e-6 * std::max(out.value, 1e-300);
  }
  return out;
}

double fractional_norm(const RadialField& field, double s, int n) {
  const double h = uniform_spacing(field);
  if (s < 0.0) throw ValidationError("fractional order must be nonnegative");
  double peak = 0.0;
  for (double v : field.v) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  const std::size_t M = field.v.size();
  // Truncation at R must be harmless: require decay faster than 1/rho and a negligible edge value.
  const double R = field.rho.back();
  if (std::abs(field.v.back()) > 1e-10 * peak) {
    const auto fit = decay_exponent(field, 0.5 * R, R);
    if (fit.exponent > -1.0) throw ValidationError("field decays too slowly for the Hankel transform");
    throw ValidationError("field is not negligible at the end of the grid");
  }
  const double nu = n / 2.0 - 1.0;
  std::vector<double> weighted(M);
  for (std::size_t i = 0; i < M; ++i) weighted[i] = field.v[i] * std::pow(field.rho[i], n - 1);
  std::vector<double> buf(M);
  auto transform = [&](double k) {
    for (std::size_t i = 0; i < M; ++i) buf[i] = weighted[i] * bessel_scaled(nu, k * field.rho[i]);
    return gregory_integral(buf, h);
  };
  auto integrand = [&](double k) {
    const double u = transform(k);
    return std::pow(k, 2.0 * s + n - 1.0) * u * u;
  };
  // Fixed panels: adaptive refinement would chase the roundoff floor of the transform at large k.
  using GL = boost::math::quadrature::gauss<double, 30>;
  const double k_max = M_PI / h;
  const double width = std::min(2.0, 4.0 * M_PI / R);
  double total = 0.0;
  int quiet = 0;
  for (double a = 0.0; a < k_max && quiet < 3; a += width) {
    const double piece = GL::integrate(integrand, a, std::min(a + width, k_max));
    total += piece;
    quiet = piece < 1e-15 * total ? quiet + 1 : 0;
  }
  return std::sqrt(total);
}

double weighted_sup(const RadialField& field, double w) {
  double m = 0.0;
  for (std::size_t i = 0; i < field.v.size(); ++i) {
    const double r = field.rho[i];
    m = std::max(m, std::pow(1.0 + r * r, 0.5 * w) * std::abs(field.v[i]));
  }
  return m;
}

DecayFit decay_exponent(const RadialField& field, double rho_min, double rho_max) {
  if (!(rho_min > 0.0 && rho_max > rho_min)) throw ValidationError("decay window must satisfy 0 < rho_min < rho_max");
  std::vector<double> X, Y;
  DecayFit fit;
  int last_sign = 0;
  for (std::size_t i = 0; i < field.v.size(); ++i) {
    const double r = field.rho[i];
    if (r < rho_min || r > rho_max) continue;
    const double v = field.v[i];
    const int sg = (v > 0) - (v < 0);
    if (sg != 0 && last_sign != 0 && sg != last_sign) fit.sign_change = true;
    if (sg != 0) last_sign = sg;
    if (v == 0.0) continue;
    X.push_back(std::log(r));
    Y.push_back(std::log(std::abs(v)));
  }
  fit.points = static_cast<int>(X.size());
  if (fit.points < 3) throw ValidationError("decay window holds fewer than 3 usable samples");
  const double mx = std::accumulate(X.begin(), X.end(), 0.0) / X.size();
  const double my = std::accumulate(Y.begin(), Y.end(), 0.0) / Y.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  if (sxx == 0.0) {
    fit.exponent = 0.0;
    return fit;
  }
  fit.exponent = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double e = Y[i] - my - fit.exponent * (X[i] - mx);
    ss += e * e;
  }
  if (X.size() > 2) fit.stderr_ = std::sqrt(ss / (X.size() - 2) / sxx);
  return fit;
}

}  // namespace wml
