#include "fedgraph/baselines.hpp"

#include <cmath>
#include <string>

namespace fedgraph {

namespace {
constexpr std::uint64_t kSubgradientStream = 0x73756267ULL;
}  // namespace

LocalEstimates local_all(const FederatedData& data,
                         const LocalFitOptions& options) {
  data.validate();
  LocalEstimates out;
  out.theta.resize(data.num_devices(), data.spec.dim);
  out.fits.reserve(data.devices.size());
  for (int u = 0; u < data.num_devices(); ++u) {
    out.fits.push_back(local_estimate(data.spec, data.devices[u], options));
    out.theta.row(u) = out.fits.back().theta_hat.transpose();
  }
  return out;
}

Matrix global_estimate(const FederatedData& data, const LocalFitOptions& options) {
  data.validate();
  Eigen::Index total = 0;
  for (const auto& d : data.devices) total += d.size();
  DeviceData pooled;
  pooled.x.resize(total, data.spec.dim);
  const bool has_y = data.spec.family != Family::mean;
  if (has_y) pooled.y.resize(total);
  Eigen::Index row = 0;
  for (const auto& d : data.devices) {
    pooled.x.middleRows(row, d.size()) = d.x;
    if (has_y) pooled.y.segment(row, d.size()) = d.y;
    row += d.size();
  }
  const LocalFit fit = local_estimate(data.spec, pooled, options);
  return fit.theta_hat.transpose().replicate(data.num_devices(), 1);
}

Matrix oracle_estimate(const FederatedData& data, const DeviceGraph& g0,
                       const SolverConfig& config) {
  return run(g0, data, config).theta_bar;
}

EdgeSelectedFit fed_admm_es(const DeviceGraph& g, const FederatedData& data,
                            const std::vector<LocalFit>& fits, double alpha,
                            const SolverConfig& config) {
  EdgeSelectedFit out;
  out.report = select_edges(g, fits, alpha);
  out.theta = run(out.report.selected, data, config).theta_bar;
  return out;
}

EdgeSelectedFit fed_admm_local_es(const FederatedData& data,
                                  const std::vector<LocalFit>& fits,
                                  double alpha, const SolverConfig& config) {
  EdgeSelectedFit out;
  out.report = local_es_candidate_graph(fits, alpha);
  out.theta = run(out.report.selected, data, config).theta_bar;
  return out;
}

Matrix subgradient_solver(const DeviceGraph& g, const FederatedData& data,
                          const SubgradientConfig& config,
                          const SubgradientHook& hook) {
  data.validate();
  if (g.num_nodes() != data.num_devices()) {
    throw ValidationError("graph and dataset disagree on the device count");
  }
  if (!(config.step > 0.0)) throw ValidationError("subgradient step must be positive");
  const int nv = data.num_devices();
  const int p = data.spec.dim;
  const double weight = config.lambda * nv;
  Matrix theta = Matrix::Zero(nv, p);
  Matrix direction(nv, p);
  for (int t = 1; t <= config.iterations; ++t) {
    for (int u = 0; u < nv; ++u) {
      Rng rng = Rng::keyed(config.seed, {kSubgradientStream,
                                         static_cast<std::uint64_t>(u),
                                         static_cast<std::uint64_t>(t)});
      direction.row(u) = stochastic_gradient(data.spec, data.devices[u],
                                             theta.row(u).transpose(),
                                             config.batch_size, rng)
                             .transpose();
    }
    if (weight > 0.0) {
      for (const auto& e : g.edges()) {
        const Vector d = (theta.row(e.plus) - theta.row(e.minus)).transpose();
        Vector s(p);
        if (config.norm == EdgeNorm::l1) {
          for (int i = 0; i < p; ++i) s(i) = d(i) > 0.0 ? 1.0 : (d(i) < 0.0 ? -1.0 : 0.0);
        } else {
          const double nd = d.norm();
          s = nd > 0.0 ? Vector(d / nd) : Vector(Vector::Zero(p));
        }
        direction.row(e.plus) += weight * s.transpose();
        direction.row(e.minus) -= weight * s.transpose();
      }
    }
    theta -= (config.step / std::sqrt(static_cast<double>(t))) * direction;
    if (hook) hook(t, theta);
  }
  return theta;
}

double avg_sq_error(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw ValidationError("estimate and truth have different shapes");
  }
  return (estimate - truth).squaredNorm() / static_cast<double>(truth.rows());
}

}  // namespace fedgraph
