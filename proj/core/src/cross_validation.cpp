#include "fedgraph/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fedgraph {

namespace {

constexpr std::uint64_t kFoldStream = 0x666f6c64ULL;

bool use_reference(const DeviceGraph& g, const FederatedData& data) {
  return g.num_nodes() <= 50 && data.spec.dim <= 25;
}

// Per-component pooled fit: the minimizer once lambda forces consensus.
Matrix component_consensus_fit(const DeviceGraph& g, const FederatedData& data) {
  const Clustering comps = connected_components(g);
  Matrix theta(data.num_devices(), data.spec.dim);
  for (int k = 0; k < comps.num_clusters; ++k) {
    // Minimizes sum_u M_u over the component, i.e. a pooled fit weighted by
    // 1/n_u per sample; identical n_u reduces to stacking.
    std::vector<int> members;
    for (int u = 0; u < data.num_devices(); ++u) {
      if (comps.label[u] == k) members.push_back(u);
    }
    Vector x = Vector::Zero(data.spec.dim);
    for (int it = 0; it < 100; ++it) {
      Vector grad = Vector::Zero(data.spec.dim);
      Matrix hess = Matrix::Zero(data.spec.dim, data.spec.dim);
      for (int u : members) {
        grad += risk_gradient(data.spec, data.devices[u], x);
        hess += empirical_hessian(data.spec, data.devices[u], x);
      }
      if (grad.norm() <= 1e-12) break;
      x -= spd_solve(hess, grad, "pooled Hessian");
      if (data.spec.family != Family::logistic) break;
    }
    for (int u : members) theta.row(u) = x.transpose();
  }
  return theta;
}

bool is_component_consensus(const DeviceGraph& g, const Matrix& theta) {
  for (const auto& e : g.edges()) {
    const double gap = (theta.row(e.plus) - theta.row(e.minus)).lpNorm<Eigen::Infinity>();
    if (gap > 1e-6 * std::max(1.0, theta.lpNorm<Eigen::Infinity>())) return false;
  }
  return true;
}

}  // namespace

Matrix cv_fit(const DeviceGraph& g, const FederatedData& data, double lambda,
              const CvOptions& options) {
  if (use_reference(g, data)) {
    return reference_minimizer(g, data, lambda, options.norm, options.reference).theta;
  }
  SolverConfig config = options.admm;
  config.lambda = lambda;
  config.norm = options.norm;
  for (const auto& d : data.devices) {
    if (config.batch_size > d.size()) config.batch_size = static_cast<int>(d.size());
  }
  return run(g, data, config).theta_bar;
}

double lambda_max(const DeviceGraph& g, const FederatedData& data,
                  const CvOptions& options) {
  if (g.num_edges() == 0) return 0.0;
  const Matrix consensus = component_consensus_fit(g, data);
  // Stationarity of F at the consensus point: lambda D^T Z = -G with
  // G_u = |V|^{-1} grad M_u. The minimum-norm Z certifies optimality for any
  // lambda >= max_e ||Z_e||_dual.
  Matrix grad(data.num_devices(), data.spec.dim);
  for (int u = 0; u < data.num_devices(); ++u) {
    grad.row(u) = risk_gradient(data.spec, data.devices[u],
                                consensus.row(u).transpose())
                      .transpose() /
                  data.num_devices();
  }
  const Matrix dt = incidence_matrix(g).transpose();
  const Matrix z = dt.completeOrthogonalDecomposition().solve(-grad);
  double upper = 0.0;
  for (Eigen::Index e = 0; e < z.rows(); ++e) {
    upper = std::max(upper, options.norm == EdgeNorm::l1
                                ? z.row(e).lpNorm<Eigen::Infinity>()
                                : z.row(e).norm());
  }
  if (upper <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = upper;
  for (int step = 0; step < options.refine_steps; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (is_component_consensus(g, cv_fit(g, data, mid, options))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

CvResult cross_validate_lambda(const DeviceGraph& g, const FederatedData& data,
                               const CvOptions& options) {
  data.validate();
  if (options.folds < 2) throw ValidationError("cv.folds must be >= 2");
  for (int u = 0; u < data.num_devices(); ++u) {
    if (data.devices[u].size() < options.folds) {
      throw ValidationError("device " + std::to_string(u + 1) + " has fewer samples (" +
                            std::to_string(data.devices[u].size()) + ") than cv folds (" +
                            std::to_string(options.folds) + ")");
    }
  }
  CvResult result;
  if (!options.grid.empty()) {
    result.grid = options.grid;
    std::sort(result.grid.begin(), result.grid.end());
  } else {
    result.lambda_max = lambda_max(g, data, options);
    if (result.lambda_max <= 0.0) {
      result.grid = {0.0};
    } else {
      const int m = std::max(options.grid_size, 1);
      const double lo = std::log(options.min_ratio * result.lambda_max);
      const double hi = std::log(result.lambda_max);
      for (int i = 0; i < m; ++i) {
        const double frac = m == 1 ? 1.0 : static_cast<double>(i) / (m - 1);
        result.grid.push_back(std::exp(lo + frac * (hi - lo)));
      }
    }
  }
  if (result.grid.size() == 1) {
    result.lambda = result.grid.front();
    result.scores = {0.0};
    return result;
  }

  // Per-device shuffled fold assignment.
  std::vector<std::vector<int>> fold_of(data.devices.size());
  for (int u = 0; u < data.num_devices(); ++u) {
    const auto n = static_cast<std::size_t>(data.devices[u].size());
    Rng rng = Rng::keyed(options.seed, {kFoldStream, static_cast<std::uint64_t>(u)});
    std::vector<int> scratch;
    std::vector<int> order;
    sample_without_replacement(rng, n, n, scratch, order);
    fold_of[u].assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      fold_of[u][order[i]] = static_cast<int>(i % static_cast<std::size_t>(options.folds));
    }
  }

  result.scores.assign(result.grid.size(), 0.0);
  for (int fold = 0; fold < options.folds; ++fold) {
    FederatedData train;
    train.spec = data.spec;
    std::vector<DeviceData> held_out;
    for (int u = 0; u < data.num_devices(); ++u) {
      std::vector<int> tr;
      std::vector<int> te;
      for (std::size_t k = 0; k < fold_of[u].size(); ++k) {
        (fold_of[u][k] == fold ? te : tr).push_back(static_cast<int>(k));
      }
      train.devices.push_back(data.devices[u].subset(tr));
      held_out.push_back(data.devices[u].subset(te));
    }
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
      const Matrix theta = cv_fit(g, train, result.grid[i], options);
      double loss_sum = 0.0;
      for (int u = 0; u < data.num_devices(); ++u) {
        loss_sum += empirical_risk(data.spec, held_out[u], theta.row(u).transpose());
      }
      result.scores[i] += loss_sum / data.num_devices() / options.folds;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.scores.size(); ++i) {
    if (result.scores[i] < result.scores[best]) best = i;
  }
  result.lambda = result.grid[best];
  return result;
}

}  // namespace fedgraph
