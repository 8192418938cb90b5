#include "fedgraph/models.hpp"

#include <algorithm>
#include <string>

namespace fedgraph {

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::mean: return "mean";
    case Family::linear: return "linear";
    case Family::logistic: return "logistic";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "mean") return Family::mean;
  if (name == "linear") return Family::linear;
  if (name == "logistic") return Family::logistic;
  throw ValidationError("unknown model family '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (dim < 1) throw ValidationError("model dimension must be >= 1");
  if (!(sigma > 0.0)) throw ValidationError("model sigma must be positive");
}

DeviceData DeviceData::subset(std::span<const int> rows) const {
  DeviceData out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  if (y.size() > 0) out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.x.row(r) = x.row(rows[i]);
    if (y.size() > 0) out.y(r) = y(rows[i]);
  }
  return out;
}

void validate(const ModelSpec& spec, const DeviceData& data) {
  spec.validate();
  if (data.size() < 1) throw ValidationError("device has no samples");
  if (data.x.cols() != spec.dim) {
    throw ValidationError("device data has " + std::to_string(data.x.cols()) +
                          " columns, model dimension is " +
                          std::to_string(spec.dim));
  }
  if (spec.family == Family::mean) {
    if (data.y.size() != 0) {
      throw ValidationError("mean-family data must not carry responses");
    }
    return;
  }
  if (data.y.size() != data.x.rows()) {
    throw ValidationError("response count does not match covariate rows");
  }
  if (spec.family == Family::logistic) {
    for (Eigen::Index k = 0; k < data.y.size(); ++k) {
      if (data.y(k) != 0.0 && data.y(k) != 1.0) {
        throw ValidationError("logistic responses must be 0 or 1");
      }
    }
  }
}

void FederatedData::validate() const {
  if (devices.empty()) throw ValidationError("dataset has no devices");
  for (const auto& d : devices) fedgraph::validate(spec, d);
}

namespace {

void check_theta(const ModelSpec& spec, const Vector& theta) {
  if (theta.size() != spec.dim) {
    throw ValidationError("parameter has dimension " +
                          std::to_string(theta.size()) + ", expected " +
                          std::to_string(spec.dim));
  }
}

}  // namespace

double loss(const ModelSpec& spec, const DeviceData& data, Eigen::Index k,
            const Vector& theta) {
  check_theta(spec, theta);
  switch (spec.family) {
    case Family::mean:
      return (data.x.row(k).transpose() - theta).squaredNorm() /
             (2.0 * spec.sigma * spec.sigma);
    case Family::linear: {
      const double r = data.y(k) - data.x.row(k).dot(theta);
      return 0.5 * r * r;
    }
    case Family::logistic: {
      const double t = data.x.row(k).dot(theta);
      return softplus(t) - data.y(k) * t;
    }
  }
  return 0.0;
}

Vector grad_psi(const ModelSpec& spec, const DeviceData& data, Eigen::Index k,
                const Vector& theta) {
  check_theta(spec, theta);
  switch (spec.family) {
    case Family::mean:
      return (theta - data.x.row(k).transpose()) / (spec.sigma * spec.sigma);
    case Family::linear: {
      const double r = data.y(k) - data.x.row(k).dot(theta);
      return -r * data.x.row(k).transpose();
    }
    case Family::logistic: {
      const double t = data.x.row(k).dot(theta);
      return (sigmoid(t) - data.y(k)) * data.x.row(k).transpose();
    }
  }
  return Vector::Zero(spec.dim);
}

double empirical_risk(const ModelSpec& spec, const DeviceData& data,
                      const Vector& theta) {
  check_theta(spec, theta);
  const auto n = static_cast<double>(data.size());
  switch (spec.family) {
    case Family::mean:
      return (data.x.rowwise() - theta.transpose()).squaredNorm() /
             (2.0 * spec.sigma * spec.sigma * n);
    case Family::linear:
      return 0.5 * (data.y - data.x * theta).squaredNorm() / n;
    case Family::logistic: {
      const Vector t = data.x * theta;
      double total = 0.0;
      for (Eigen::Index k = 0; k < t.size(); ++k) {
        total += softplus(t(k)) - data.y(k) * t(k);
      }
      return total / n;
    }
  }
  return 0.0;
}

Vector risk_gradient(const ModelSpec& spec, const DeviceData& data,
                     const Vector& theta) {
  check_theta(spec, theta);
  const auto n = static_cast<double>(data.size());
  switch (spec.family) {
    case Family::mean:
      return (theta - data.x.colwise().mean().transpose()) /
             (spec.sigma * spec.sigma);
    case Family::linear:
      return data.x.transpose() * (data.x * theta - data.y) / n;
    case Family::logistic: {
      Vector r = data.x * theta;
      for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = sigmoid(r(k)) - data.y(k);
      return data.x.transpose() * r / n;
    }
  }
  return Vector::Zero(spec.dim);
}

Vector batch_gradient(const ModelSpec& spec, const DeviceData& data,
                      const Vector& theta, std::span<const int> rows) {
  check_theta(spec, theta);
  Vector g = Vector::Zero(spec.dim);
  switch (spec.family) {
    case Family::mean:
      for (int k : rows) g += theta - data.x.row(k).transpose();
      g /= spec.sigma * spec.sigma;
      break;
    case Family::linear:
      for (int k : rows) {
        const double r = data.x.row(k).dot(theta) - data.y(k);
        g += r * data.x.row(k).transpose();
      }
      break;
    case Family::logistic:
      for (int k : rows) {
        const double r = sigmoid(data.x.row(k).dot(theta)) - data.y(k);
        g += r * data.x.row(k).transpose();
      }
      break;
  }
  return g / static_cast<double>(rows.size());
}

Matrix empirical_hessian(const ModelSpec& spec, const DeviceData& data,
                         const Vector& theta) {
  check_theta(spec, theta);
  const auto n = static_cast<double>(data.size());
  switch (spec.family) {
    case Family::mean:
      return Matrix::Identity(spec.dim, spec.dim) / (spec.sigma * spec.sigma);
    case Family::linear: {
      Matrix h = Matrix::Zero(spec.dim, spec.dim);
      h.selfadjointView<Eigen::Lower>().rankUpdate(data.x.transpose(), 1.0 / n);
      return h.selfadjointView<Eigen::Lower>();
    }
    case Family::logistic: {
      const Vector t = data.x * theta;
      Vector w(t.size());
      for (Eigen::Index k = 0; k < t.size(); ++k) {
        w(k) = std::sqrt(sigmoid_derivative(t(k)));
      }
      const Matrix wx = w.asDiagonal() * data.x;
      Matrix h = Matrix::Zero(spec.dim, spec.dim);
      h.selfadjointView<Eigen::Lower>().rankUpdate(wx.transpose(), 1.0 / n);
      return h.selfadjointView<Eigen::Lower>();
    }
  }
  return Matrix::Zero(spec.dim, spec.dim);
}

std::pair<double, double> hessian_eigen_diagnostics(const ModelSpec& spec,
                                                    const DeviceData& data,
                                                    const Vector& theta) {
  return extreme_eigenvalues(empirical_hessian(spec, data, theta));
}

Matrix asymptotic_covariance(const ModelSpec& spec, const DeviceData& data,
                             const Vector& theta) {
  const Matrix nh =
      static_cast<double>(data.size()) * empirical_hessian(spec, data, theta);
  return spd_inverse(nh, "n * empirical Hessian");
}

namespace {

double condition_number(const Matrix& a) {
  const auto [lo, hi] = extreme_eigenvalues(a);
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

void require_well_posed(const Matrix& h, const char* what) {
  const auto [lo, hi] = extreme_eigenvalues(h);
  if (!(lo > 1e-12 * std::max(hi, 1e-300))) {
    throw SingularSystemError(
        std::string(what) + " is singular (condition number " +
            std::to_string(condition_number(h)) + ")",
        condition_number(h));
  }
}

LocalFit newton_logistic(const ModelSpec& spec, const DeviceData& data,
                         const LocalFitOptions& options) {
  LocalFit fit;
  Vector theta = Vector::Zero(spec.dim);
  double risk = empirical_risk(spec, data, theta);
  Vector grad = risk_gradient(spec, data, theta);
  Vector best = theta;
  double best_grad = grad.norm();

  for (int it = 0; it < options.max_iter; ++it) {
    if (grad.norm() <= options.tol) {
      fit.converged = true;
      fit.iterations = it;
      break;
    }
    const Matrix h = empirical_hessian(spec, data, theta);
    require_well_posed(h, "logistic Newton Hessian");
    const Vector step = spd_solve(h, grad, "logistic Newton Hessian");
    // Below rounding level the gradient test can never fire.
    if (step.norm() <= 1e-14 * (1.0 + theta.norm())) {
      fit.converged = true;
      fit.iterations = it;
      break;
    }
    double scale = 1.0;
    Vector candidate = theta - step;
    project_to_ball(candidate, options.projection_radius);
    double candidate_risk = empirical_risk(spec, data, candidate);
    // Past the point where the predicted decrease is below rounding in the
    // risk, comparisons of risk values are noise; keep the full step.
    const bool quadratic_regime = grad.dot(step) <= 1e-10 * std::max(1.0, std::abs(risk));
    for (int h_count = 0;
         !quadratic_regime && h_count < options.max_halvings && candidate_risk > risk;
         ++h_count) {
      scale *= 0.5;
      candidate = theta - scale * step;
      project_to_ball(candidate, options.projection_radius);
      candidate_risk = empirical_risk(spec, data, candidate);
    }
    theta = candidate;
    risk = candidate_risk;
    grad = risk_gradient(spec, data, theta);
    fit.iterations = it + 1;
    if (grad.norm() < best_grad) {
      best_grad = grad.norm();
      best = theta;
    }
  }
  if (!fit.converged && grad.norm() <= options.tol) fit.converged = true;
  fit.theta_hat = fit.converged ? theta : best;
  return fit;
}

}  // namespace

LocalFit local_estimate(const ModelSpec& spec, const DeviceData& data,
                        const LocalFitOptions& options) {
  validate(spec, data);
  LocalFit fit;
  switch (spec.family) {
    case Family::mean:
      fit.theta_hat = data.x.colwise().mean().transpose();
      project_to_ball(fit.theta_hat, options.projection_radius);
      fit.converged = true;
      break;
    case Family::linear: {
      const Matrix gram = data.x.transpose() * data.x;
      require_well_posed(gram, "normal equations");
      fit.theta_hat = spd_solve(gram, data.x.transpose() * data.y,
                                "normal equations");
      project_to_ball(fit.theta_hat, options.projection_radius);
      fit.converged = true;
      break;
    }
    case Family::logistic:
      fit = newton_logistic(spec, data, options);
      break;
  }
  fit.omega_hat = asymptotic_covariance(spec, data, fit.theta_hat);
  return fit;
}

}  // namespace fedgraph
