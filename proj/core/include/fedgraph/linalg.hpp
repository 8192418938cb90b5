#pragma once

#include <Eigen/Dense>

#include <utility>

namespace fedgraph {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Cholesky factorization with a single jitter retry.
///
/// If the plain factorization fails, 1e-10 * trace(A)/n * I is added once and
/// the factorization retried; a second failure throws NumericError. The
/// `jittered` flag records whether the retry was needed.
struct SpdFactor {
  Eigen::LLT<Matrix> llt;
  bool jittered = false;
};

SpdFactor spd_factor(const Matrix& a, const char* what = "matrix");

/// A^{-1} b for symmetric positive definite A under the jitter policy.
Vector spd_solve(const Matrix& a, const Vector& b, const char* what = "matrix");

/// A^{-1} for symmetric positive definite A under the jitter policy.
Matrix spd_inverse(const Matrix& a, const char* what = "matrix");

/// x^T A^{-1} x for symmetric positive definite A under the jitter policy.
double spd_quadratic_form(const Matrix& a, const Vector& x,
                          const char* what = "matrix");

/// Eigenvalues of a symmetric matrix in ascending order.
Vector symmetric_eigenvalues(const Matrix& a);

/// (smallest, largest) eigenvalue of a symmetric matrix.
std::pair<double, double> extreme_eigenvalues(const Matrix& a);

/// Euclidean projection onto the ball of the given radius (no-op if infinite).
void project_to_ball(Eigen::Ref<Vector> v, double radius);

}  // namespace fedgraph
