#pragma once

#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace dmef {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative Frobenius tolerance for accepting an input as symmetric.
inline constexpr double kSymmetryTol = 1e-10;
/// Positive definiteness threshold, scaled by (1 + ||X||_F).
inline constexpr double kDefinitenessTol = 1e-12;

Matrix symmetrize(const Matrix& x);
bool is_symmetric(const Matrix& x, double rel_tol = kSymmetryTol);

/// Extreme eigenvalues of the symmetric part of x.
double min_eigenvalue(const Matrix& x);
double max_eigenvalue(const Matrix& x);

bool is_positive_definite(const Matrix& x);

void require_shape(const Matrix& x, Index rows, Index cols, std::string_view which);
void require_symmetric(const Matrix& x, std::string_view which);
/// Throws NotPositiveDefinite(which, lambda_min) unless x is symmetric PD.
void require_positive_definite(const Matrix& x, std::string_view which);
void require_positive_semidefinite(const Matrix& x, std::string_view which);

Matrix block_diagonal(std::span<const Matrix> blocks);
Matrix kron(const Matrix& a, const Matrix& b);

/// Largest real part over the spectrum of a square matrix.
double spectral_abscissa(const Matrix& x);

/// Exact equality that treats matrices of different shapes as unequal.
template <class A, class B>
bool same(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace dmef
