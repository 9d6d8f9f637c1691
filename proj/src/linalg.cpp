#include "dmef/linalg.hpp"

#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "dmef/error.hpp"

namespace dmef {

Matrix symmetrize(const Matrix& x) { return 0.5 * (x + x.transpose()); }

bool is_symmetric(const Matrix& x, double rel_tol) {
  if (x.rows() != x.cols()) return false;
  const double scale = x.norm();
  return (x - x.transpose()).norm() <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

namespace {

Vector symmetric_eigenvalues(const Matrix& x) {
  if (x.size() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(x), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace

double min_eigenvalue(const Matrix& x) {
  const Vector ev = symmetric_eigenvalues(x);
  return ev.size() == 0 ? 0.0 : ev.minCoeff();
}

double max_eigenvalue(const Matrix& x) {
  const Vector ev = symmetric_eigenvalues(x);
  return ev.size() == 0 ? 0.0 : ev.maxCoeff();
}

bool is_positive_definite(const Matrix& x) {
  if (x.rows() != x.cols() || x.size() == 0 || !x.allFinite()) return false;
  return min_eigenvalue(x) > kDefinitenessTol * (1.0 + x.norm());
}

void require_shape(const Matrix& x, Index rows, Index cols, std::string_view which) {
  if (x.rows() != rows || x.cols() != cols) {
    std::ostringstream os;
    os << which << " is " << x.rows() << "x" << x.cols() << ", expected " << rows << "x" << cols;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

void require_symmetric(const Matrix& x, std::string_view which) {
  if (x.rows() != x.cols()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(which) + " is not square");
  }
  if (!is_symmetric(x)) throw Error(ErrorCode::NotSymmetric, std::string(which));
}

void require_positive_definite(const Matrix& x, std::string_view which) {
  require_symmetric(x, which);
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, std::string(which));
  const double lmin = x.size() == 0 ? 0.0 : min_eigenvalue(x);
  if (!(lmin > kDefinitenessTol * (1.0 + x.norm()))) {
    throw NotPositiveDefinite(std::string(which), lmin);
  }
}

void require_positive_semidefinite(const Matrix& x, std::string_view which) {
  require_symmetric(x, which);
  const double lmin = x.size() == 0 ? 0.0 : min_eigenvalue(x);
  if (lmin < -kSymmetryTol * (1.0 + x.norm())) {
    throw NotPositiveDefinite(std::string(which), lmin);
  }
}

Matrix block_diagonal(std::span<const Matrix> blocks) {
  Index rows = 0;
  Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Index r = 0;
  Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double spectral_abscissa(const Matrix& x) {
  Eigen::EigenSolver<Matrix> solver(x, false);
  return solver.eigenvalues().real().maxCoeff();
}

}  // namespace dmef
