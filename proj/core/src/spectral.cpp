#include "wml/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <lapacke.h>

#include "wml/chebyshev.hpp"
#include "wml/errors.hpp"
#include "wml/operators.hpp"

namespace wml {

namespace {

SpectralProblem build(int n, int N, double x_max, const std::function<double(double)>& V) {
  if (N < 8) throw ValidationError("spectral order N too small");
  SpectralProblem p;
  p.N = N;
  p.n = n;
  p.x_max = x_max;
  p.x = chebyshev_nodes(N, 0.0, x_max);
  p.rho = p.x.cwiseSqrt();
  p.weights = clenshaw_curtis_weights(N, 0.0, x_max);
  p.D = chebyshev_matrix(N, 0.0, x_max);
  p.V.resize(N + 1);
  for (int j = 0; j <= N; ++j) p.V[j] = V(p.rho[j]);
  const int m = N + 1;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd Lambda = 2.0 * p.x.asDiagonal() * p.D;
  p.A.resize(2 * m, 2 * m);
  p.A.topLeftCorner(m, m) = -Lambda - I;
  p.A.topRightCorner(m, m) = I;
  p.A.bottomLeftCorner(m, m) = 4.0 * p.x.asDiagonal() * (p.D * p.D) + 2.0 * n * p.D;
  p.A.bottomLeftCorner(m, m).diagonal() += p.V;
  p.A.bottomRightCorner(m, m) = -Lambda - 2.0 * I;
  return p;
}

// LAPACK dgeev balances the matrix first, which matters for the x D^2 rows at large N.
std::vector<std::complex<double>> eigenvalues_of(const Eigen::MatrixXd& A) {
  Eigen::MatrixXd work = A;
  const lapack_int m = static_cast<lapack_int>(A.rows());
  std::vector<double> wr(m), wi(m);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', m, work.data(), m, wr.data(), wi.data(),
                                        nullptr, 1, nullptr, 1);
  if (info != 0) throw NonConvergence("dense eigensolver failed");
  std::vector<std::complex<double>> out(m);
  for (lapack_int k = 0; k < m; ++k) out[k] = {wr[k], wi[k]};
  return out;
}

Eigen::VectorXd inverse_iteration(const Eigen::MatrixXd& A, double shift) {
  const Eigen::Index m = A.rows();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A - shift * Eigen::MatrixXd::Identity(m, m));
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m);
  for (int it = 0; it < 6; ++it) {
    v = lu.solve(v);
    v /= v.norm();
  }
  return v;
}

}  // namespace

SpectralProblem assemble(const ProfileSolution& profile, int N, double x_max) {
  const WarpedTarget& t = profile.target;
  return build(t.n(), N, x_max, [&](double r) { return potential_at(t, r, profile.psi1(r)); });
}

SpectralProblem assemble_free(int n, int N, double x_max) {
  return build(n, N, x_max, [](double) { return 0.0; });
}

SpectrumReport eigen(const SpectralProblem& fine, const SpectralProblem& coarse, double drift_tol,
                     double gauge_scale) {
  const auto coarse_ev = eigenvalues_of(coarse.A);
  SpectrumReport rep;
  rep.N = fine.N;
  rep.rho = fine.rho;
  rep.eigenvalues = eigenvalues_of(fine.A);
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
            [](auto a, auto b) { return a.real() > b.real() || (a.real() == b.real() && a.imag() > b.imag()); });
  rep.max_unconverged_re = -std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rep.eigenvalues.size(); ++k) {
    const auto lam = rep.eigenvalues[k];
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& mu : coarse_ev) dist = std::min(dist, std::abs(lam - mu));
    const double drift = dist / std::max(1.0, std::abs(lam));
    rep.drift.push_back(drift);
    rep.converged.push_back(drift <= drift_tol);
    if (drift > drift_tol) rep.max_unconverged_re = std::max(rep.max_unconverged_re, lam.real());
    if (drift <= drift_tol && std::abs(lam - 1.0) < best) best = std::abs(lam - 1.0), rep.gauge_index = static_cast<int>(k);
  }
  if (rep.gauge_index < 0 || best > 0.1) throw NonConvergence("no converged eigenvalue near 1");
  rep.gauge = rep.eigenvalues[rep.gauge_index];
  rep.gauge_drift = rep.drift[rep.gauge_index];
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rep.eigenvalues.size(); ++k)
    if (rep.converged[k] && static_cast<int>(k) != rep.gauge_index) top = std::max(top, rep.eigenvalues[k].real());
  rep.gap = -top;

  // Simple eigenvalue: eigenvectors by shifted inverse iteration on A and A^T.
  const double lam = rep.gauge.real();
  const double shift = lam + 1e-9;
  const int m = fine.N + 1;
  rep.right = inverse_iteration(fine.A, shift);
  Eigen::VectorXd lt = inverse_iteration(fine.A.transpose(), shift);
  rep.right *= gauge_scale / rep.right[fine.N];  // first component at rho = 0
  rep.gauge_residual = (fine.A * rep.right - lam * rep.right).norm() / rep.right.norm();
  rep.weights.resize(2 * m);
  rep.weights << fine.weights, fine.weights;
  const double pairing = lt.dot(rep.right);
  if (std::abs(pairing) < 1e-14 * lt.norm() * rep.right.norm())
    throw NonConvergence("gauge eigenvalue is not simple at this resolution");
  rep.left = lt.cwiseQuotient(rep.weights) / pairing;
  return rep;
}

SpectrumReport analyze_spectrum(const ProfileSolution& profile, const SpectralConfig& cfg) {
  const auto fine = assemble(profile, cfg.N, cfg.x_max);
  const auto coarse = assemble(profile, cfg.N / 2, cfg.x_max);
  return eigen(fine, coarse, cfg.drift_tol, profile.b);
}

double verify_gauge_ode(const ProfileSolution& profile, const std::vector<double>& rho) {
  const WarpedTarget& t = profile.target;
  const int n = t.n();
  double res = 0.0;
  for (double r : rho) {
    const auto d = profile.eval(r);
    const double w = d.f1, w1 = d.f2, w2 = d.f3;
    const double drift = r == 0.0 ? (n - 1.0) * w2 : ((n - 1.0) / r - 6.0 * r) * w1;
    const double v = (1.0 - r * r) * w2 + drift - 6.0 * w + potential_at(t, r, d.u) * w;
    res = std::max(res, std::abs(v));
  }
  return res;
}

double verify_gauge_ode(const ProfileSolution& profile) {
  std::vector<double> rho;
  for (int i = 0; i <= 4000; ++i) rho.push_back(10.0 * i / 4000.0);
  return verify_gauge_ode(profile, rho);
}

double Projector::coefficient(const Eigen::VectorXd& u) const { return (l.cwiseProduct(w)).dot(u); }

Eigen::VectorXd Projector::apply(const Eigen::VectorXd& u) const { return coefficient(u) * r; }

Projector unstable_projection(const SpectrumReport& rep) {
  if (rep.right.size() == 0) throw ValidationError("spectrum report carries no eigenvectors");
  return Projector{rep.right, rep.left, rep.weights};
}

}  // namespace wml
