#include "fedgraph/linalg.hpp"

#include "fedgraph/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fedgraph {

SpdFactor spd_factor(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw ValidationError(std::string(what) + " is not square");
  }
  SpdFactor f;
  f.llt.compute(a);
  if (f.llt.info() == Eigen::Success) {
    return f;
  }
  const double n = static_cast<double>(a.rows());
  double jitter = 1e-10 * a.trace() / n;
  if (!(jitter > 0.0)) {
    jitter = 1e-10;
  }
  Matrix shifted = a;
  shifted.diagonal().array() += jitter;
  f.llt.compute(shifted);
  f.jittered = true;
  if (f.llt.info() != Eigen::Success) {
    throw NumericError(std::string(what) +
                       " is not positive definite after jitter");
  }
  return f;
}

Vector spd_solve(const Matrix& a, const Vector& b, const char* what) {
  return spd_factor(a, what).llt.solve(b);
}

Matrix spd_inverse(const Matrix& a, const char* what) {
  const auto f = spd_factor(a, what);
  return f.llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

double spd_quadratic_form(const Matrix& a, const Vector& x, const char* what) {
  const auto f = spd_factor(a, what);
  // x^T (L L^T)^{-1} x = ||L^{-1} x||^2
  const Vector w = f.llt.matrixL().solve(x);
  return w.squaredNorm();
}

Vector symmetric_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolve did not converge");
  }
  return solver.eigenvalues();
}

std::pair<double, double> extreme_eigenvalues(const Matrix& a) {
  const Vector ev = symmetric_eigenvalues(a);
  return {ev(0), ev(ev.size() - 1)};
}

void project_to_ball(Eigen::Ref<Vector> v, double radius) {
  if (!std::isfinite(radius)) {
    return;
  }
  const double norm = v.norm();
  if (norm > radius) {
    v *= radius / norm;
  }
}

}  // namespace fedgraph
