#pragma once

#include "fedgraph/edge_select.hpp"
#include "fedgraph/fedadmm.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace fedgraph {

/// Per-device local fits stacked into a |V| x p matrix.
struct LocalEstimates {
  Matrix theta;
  std::vector<LocalFit> fits;
};

LocalEstimates local_all(const FederatedData& data,
                         const LocalFitOptions& options = {});

/// One pooled fit over all devices' samples, replicated to every row.
Matrix global_estimate(const FederatedData& data,
                       const LocalFitOptions& options = {});

/// Fed-ADMM run on the characteristic graph.
Matrix oracle_estimate(const FederatedData& data, const DeviceGraph& g0,
                       const SolverConfig& config);

/// Edge selection on `g` followed by Fed-ADMM on the selected graph.
struct EdgeSelectedFit {
  Matrix theta;
  EdgeTestReport report;
};
EdgeSelectedFit fed_admm_es(const DeviceGraph& g, const FederatedData& data,
                            const std::vector<LocalFit>& fits, double alpha,
                            const SolverConfig& config);

/// Same with all device pairs as candidates.
EdgeSelectedFit fed_admm_local_es(const FederatedData& data,
                                  const std::vector<LocalFit>& fits,
                                  double alpha, const SolverConfig& config);

/// Centralized (sub)gradient descent on |V| F(Theta), the same scaling the
/// ADMM engine uses. Step size step / sqrt(t) for t = 1..iterations. The
/// subgradient of phi at 0 is taken as 0. batch_size == 0 means full batch
/// (GD); otherwise each device samples a mini-batch (SGD).
struct SubgradientConfig {
  double lambda = 0.0;
  EdgeNorm norm = EdgeNorm::l1;
  double step = 0.5;
  int iterations = 1000;
  int batch_size = 0;
  std::uint64_t seed = 0;
};

using SubgradientHook = std::function<void(int t, const Matrix& theta)>;

Matrix subgradient_solver(const DeviceGraph& g, const FederatedData& data,
                          const SubgradientConfig& config,
                          const SubgradientHook& hook = {});

/// ||estimate - truth||_F^2 / |V|.
double avg_sq_error(const Matrix& estimate, const Matrix& truth);

}  // namespace fedgraph
