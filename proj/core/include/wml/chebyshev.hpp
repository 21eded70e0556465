#pragma once

#include <Eigen/Dense>
#include <vector>

namespace wml {

// Chebyshev-Lobatto nodes x_j = cos(j pi / N) mapped to [a, b]; node 0 is b.
Eigen::VectorXd chebyshev_nodes(int N, double a, double b);
// Collocation differentiation matrix on the same nodes.
Eigen::MatrixXd chebyshev_matrix(int N, double a, double b);
// Clenshaw-Curtis quadrature weights on the same nodes.
Eigen::VectorXd clenshaw_curtis_weights(int N, double a, double b);
// Barycentric interpolation through Chebyshev-Lobatto data.
double barycentric(const std::vector<double>& nodes, const Eigen::VectorXd& values, double x);

}  // namespace wml
