#pragma once

#include "fedgraph/fedadmm.hpp"

#include <cstdint>
#include <vector>

namespace fedgraph {

struct CvOptions {
  int folds = 5;
  int grid_size = 10;
  double min_ratio = 1e-4;  ///< smallest grid point is min_ratio * lambda_max
  int refine_steps = 8;     ///< bisection probes when locating lambda_max
  EdgeNorm norm = EdgeNorm::l1;
  std::uint64_t seed = 0;
  /// Explicit grid; when non-empty it replaces the log-spaced default.
  std::vector<double> grid;
  /// Fits use the reference solver when |V| <= 50 and p <= 25, otherwise
  /// Fed-ADMM with this configuration (its lambda is overridden).
  SolverConfig admm;
  ReferenceOptions reference{1e-8, 200000, 1.0, true};
};

struct CvResult {
  double lambda = 0.0;
  double lambda_max = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;  ///< mean held-out loss per grid point
};

/// Fit used for held-out scoring: the reference minimizer on small problems,
/// Fed-ADMM's averaged iterate otherwise.
Matrix cv_fit(const DeviceGraph& g, const FederatedData& data, double lambda,
              const CvOptions& options);

/// Smallest lambda at which the minimizer is constant on every connected
/// component of g. Starts from the minimum-norm dual certificate at the
/// per-component pooled fit (an upper bound) and tightens it by bisection.
double lambda_max(const DeviceGraph& g, const FederatedData& data,
                  const CvOptions& options);

/// K-fold cross-validation of lambda on per-device sample splits, scored by
/// mean held-out loss. Ties go to the smaller lambda.
CvResult cross_validate_lambda(const DeviceGraph& g, const FederatedData& data,
                               const CvOptions& options);

}  // namespace fedgraph
