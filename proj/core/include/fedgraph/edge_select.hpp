#pragma once

#include "fedgraph/graph.hpp"
#include "fedgraph/models.hpp"

#include <vector>

namespace fedgraph {

/// Wald-type statistic W_e^2 for one candidate edge and its decision.
struct EdgeTest {
  Edge edge;
  double statistic = 0.0;
  double threshold = 0.0;
  bool keep = false;
};

struct EdgeTestReport {
  std::vector<EdgeTest> tests;
  double alpha = 0.05;
  std::size_t num_candidates = 0;
  double threshold = 0.0;  ///< chi^2_p upper (alpha / |E|)-quantile
  DeviceGraph selected;
};

/// (theta_plus - theta_minus)^T (Omega_plus + Omega_minus)^{-1} (...), via
/// Cholesky under the jitter policy. Throws NumericError if the summed
/// covariance is not positive definite after jitter.
double test_statistic(const LocalFit& plus, const LocalFit& minus);

/// Bonferroni threshold chi^2_p(alpha / num_candidates).
double bonferroni_threshold(int dim, double alpha, std::size_t num_candidates);

/// Tests every edge of `candidates` at level alpha / |E| and keeps those with
/// W_e^2 <= threshold (ties kept).
EdgeTestReport select_edges(const DeviceGraph& candidates,
                            const std::vector<LocalFit>& fits, double alpha);

/// Same selection but over all |V|(|V|-1)/2 pairs, ignoring any prior graph.
EdgeTestReport local_es_candidate_graph(const std::vector<LocalFit>& fits,
                                        double alpha);

/// Signal strength of a candidate edge measured in the metric
/// (c_plus Omega_plus + c_minus Omega_minus)^{-1}.
struct SignalCheck {
  double distance = 0.0;
  bool satisfied = false;  ///< n_e * distance^2 >= 4 * threshold
};

double signal_distance(const Vector& theta1, const Vector& theta2,
                       const Matrix& omega_plus, const Matrix& omega_minus,
                       double c_plus, double c_minus);

SignalCheck minimum_signal_check(const Vector& theta1, const Vector& theta2,
                                 const Matrix& omega_plus,
                                 const Matrix& omega_minus, double c_plus,
                                 double c_minus, double n_e, double threshold);

}  // namespace fedgraph
