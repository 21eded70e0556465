#include "wml/chebyshev.hpp"

#include <cmath>

namespace wml {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Eigen::VectorXd chebyshev_nodes(int N, double a, double b) {
  Eigen::VectorXd x(N + 1);
  for (int j = 0; j <= N; ++j) x[j] = a + 0.5 * (b - a) * (1.0 + std::cos(kPi * j / N));
  // symmetric nodes in exact arithmetic; keep the midpoint exact
  if (N % 2 == 0) x[N / 2] = 0.5 * (a + b);
  x[0] = b;
  x[N] = a;
  return x;
}

Eigen::MatrixXd chebyshev_matrix(int N, double a, double b) {
  Eigen::VectorXd x(N + 1), c(N + 1);
  for (int j = 0; j <= N; ++j) {
    x[j] = std::sin(kPi * (N - 2.0 * j) / (2.0 * N));  // = cos(j pi / N), symmetric rounding
    c[j] = ((j == 0 || j == N) ? 2.0 : 1.0) * (j % 2 ? -1.0 : 1.0);
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N + 1, N + 1);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j)
      if (i != j) {
        // x_i - x_j via the trigonometric identity avoids cancellation
        const double diff = 2.0 * std::sin(kPi * (i + j) / (2.0 * N)) * std::sin(kPi * (j - i) / (2.0 * N));
        D(i, j) = c[i] / (c[j] * diff);
      }
  for (int i = 0; i <= N; ++i) D(i, i) = -D.row(i).sum();
  return D * (2.0 / (b - a));
}

Eigen::VectorXd clenshaw_curtis_weights(int N, double a, double b) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(N + 1);
  for (int j = 0; j <= N; ++j) {
    const double theta = kPi * j / N;
    double s = 0.0;
    for (int k = 1; k <= N / 2; ++k) {
      const double bk = (2 * k == N) ? 1.0 : 2.0;
      s += bk / (4.0 * k * k - 1.0) * std::cos(2.0 * k * theta);
    }
    const double cj = (j == 0 || j == N) ? 1.0 : 2.0;
    w[j] = cj / N * (1.0 - s);
  }
  return w * (0.5 * (b - a));
}

double barycentric(const std::vector<double>& nodes, const Eigen::VectorXd& values, double x) {
  const int N = static_cast<int>(nodes.size()) - 1;
  double num = 0.0, den = 0.0;
  for (int j = 0; j <= N; ++j) {
    const double dx = x - nodes[j];
    if (dx == 0.0) return values[j];
    double w = (j % 2 ? -1.0 : 1.0) / dx;
    if (j == 0 || j == N) w *= 0.5;
    num += w * values[j];
    den += w;
  }
  return num / den;
}

}  // namespace wml
