#pragma once

#include "fedgraph/errors.hpp"
#include "fedgraph/linalg.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedgraph {

enum class Family { mean, linear, logistic };

std::string_view to_string(Family f) noexcept;
Family parse_family(std::string_view name);

/// Loss family and parameter dimension shared by all devices of a run.
struct ModelSpec {
  Family family = Family::linear;
  int dim = 1;
  double sigma = 1.0;  ///< noise scale of the mean family

  void validate() const;
};

/// Samples held by one device.
///
/// For the mean family each row of `x` is a sample z and `y` is empty. For
/// linear and logistic regression `x` holds covariates and `y` responses.
struct DeviceData {
  Matrix x;
  Vector y;

  Eigen::Index size() const noexcept { return x.rows(); }
  /// Rows selected by `rows`, in that order.
  DeviceData subset(std::span<const int> rows) const;
};

/// Checks shapes, n >= 1 and logistic responses in {0, 1}.
void validate(const ModelSpec& spec, const DeviceData& data);

/// One federated dataset: a shared model family and per-device samples.
struct FederatedData {
  ModelSpec spec;
  std::vector<DeviceData> devices;

  int num_devices() const noexcept { return static_cast<int>(devices.size()); }
  void validate() const;
};

// Numerically stable logistic pieces: zeta(t) = log(1 + e^t) and its first
// two derivatives.
inline double softplus(double t) noexcept {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}
inline double sigmoid(double t) noexcept {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}
inline double sigmoid_derivative(double t) noexcept {
  const double s = sigmoid(t);
  return s * (1.0 - s);
}

/// m(z; theta) for sample k of `data`.
double loss(const ModelSpec& spec, const DeviceData& data, Eigen::Index k,
            const Vector& theta);

/// psi(z; theta) = d m / d theta for sample k of `data`.
Vector grad_psi(const ModelSpec& spec, const DeviceData& data, Eigen::Index k,
                const Vector& theta);

/// Empirical risk n^{-1} sum_k m(z_k; theta).
double empirical_risk(const ModelSpec& spec, const DeviceData& data,
                      const Vector& theta);

/// Full-batch gradient of the empirical risk.
Vector risk_gradient(const ModelSpec& spec, const DeviceData& data,
                     const Vector& theta);

/// Mean of psi over the listed sample rows.
Vector batch_gradient(const ModelSpec& spec, const DeviceData& data,
                      const Vector& theta, std::span<const int> rows);

/// Empirical Hessian n^{-1} sum_k d psi(z_k; theta) / d theta.
Matrix empirical_hessian(const ModelSpec& spec, const DeviceData& data,
                         const Vector& theta);

/// (lambda_min, lambda_max) of the empirical Hessian at theta.
std::pair<double, double> hessian_eigen_diagnostics(const ModelSpec& spec,
                                                    const DeviceData& data,
                                                    const Vector& theta);

struct LocalFitOptions {
  double tol = 1e-12;       ///< gradient-norm tolerance for Newton
  int max_iter = 100;
  int max_halvings = 30;
  double projection_radius = std::numeric_limits<double>::infinity();
};

/// Per-device unpenalized estimate and its estimated sampling covariance
/// omega_hat = (n H(theta_hat))^{-1}.
struct LocalFit {
  Vector theta_hat;
  Matrix omega_hat;
  bool converged = false;
  int iterations = 0;
};

/// Thrown when the normal equations or Newton system are singular.
class SingularSystemError : public NumericError {
 public:
  SingularSystemError(const std::string& what, double condition)
      : NumericError(what), condition_(condition) {}
  /// lambda_max / lambda_min of the offending matrix (inf if singular).
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Minimizer of the device's empirical risk: the sample mean (mean family),
/// the least-squares solution (linear), or damped Newton (logistic).
/// Logistic non-convergence is reported via `converged == false` with the
/// best iterate returned.
LocalFit local_estimate(const ModelSpec& spec, const DeviceData& data,
                        const LocalFitOptions& options = {});

/// (n H)^{-1} under the Cholesky jitter policy.
Matrix asymptotic_covariance(const ModelSpec& spec, const DeviceData& data,
                             const Vector& theta);

}  // namespace fedgraph
