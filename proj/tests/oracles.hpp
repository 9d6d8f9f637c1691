#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library's numerics.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Closed form of k' = -q k^2 - 2 a k + s, k(0) = k0, q > 0.
/// With roots r1 > r2 of -q r^2 - 2 a r + s = 0 and c = (k0 - r1) / (k0 - r2):
/// k(t) = (r1 - r2 c e^{lt}) / (1 - c e^{lt}), l = -q (r1 - r2).
inline double scalar_riccati(double a, double q, double s, double k0, double t) {
  const double disc = std::sqrt(a * a + q * s);
  const double r1 = (-a + disc) / q;
  const double r2 = (-a - disc) / q;
  const double c = (k0 - r1) / (k0 - r2);
  const double g = c * std::exp(-q * (r1 - r2) * t);
  return (r1 - r2 * g) / (1.0 - g);
}

/// Positive root of 2 a z - s z^2 + b^2 = 0, the stabilizing scalar ARE solution.
inline double scalar_are(double a, double b, double s) {
  return (a + std::sqrt(a * a + s * b * b)) / s;
}

/// L(i,i) = in-degree, L(i,j) = -1 for every edge (i,j): node j sends to i.
inline Matrix laplacian(int N, const std::vector<std::pair<int, int>>& edges) {
  Matrix adj = Matrix::Zero(N, N);
  for (const auto& [i, j] : edges) adj(i - 1, j - 1) = 1.0;
  Matrix L = -adj;
  for (int i = 0; i < N; ++i) L(i, i) = adj.row(i).sum();
  return L;
}

/// Solves A^T X + X A = -Q through the Kronecker form.
inline Matrix lyapunov(const Matrix& A, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  // vec(A^T X + X A) = (I (x) A^T + A^T (x) I) vec(X)
  Matrix kron1 = Matrix::Zero(n * n, n * n), kron2 = Matrix::Zero(n * n, n * n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      kron1.block(r * n, c * n, n, n) = I(r, c) * A.transpose();
      kron2.block(r * n, c * n, n, n) = A.transpose()(r, c) * I;
    }
  }
  const Vector q = Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector x = (kron1 + kron2).fullPivLu().solve(-q);
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> d;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d(rng);
  }
  return m;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.5) {
  const Matrix g = random_matrix(rng, n, n);
  return g * g.transpose() + floor * Matrix::Identity(n, n);
}

}  // namespace oracle
