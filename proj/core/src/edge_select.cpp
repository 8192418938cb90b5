#include "fedgraph/edge_select.hpp"

#include "fedgraph/chi2.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fedgraph {

double test_statistic(const LocalFit& plus, const LocalFit& minus) {
  if (plus.theta_hat.size() != minus.theta_hat.size()) {
    throw ValidationError("local fits have different dimensions");
  }
  return spd_quadratic_form(plus.omega_hat + minus.omega_hat,
                            plus.theta_hat - minus.theta_hat,
                            "summed asymptotic covariance");
}

double bonferroni_threshold(int dim, double alpha, std::size_t num_candidates) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("alpha must lie in (0, 1)");
  }
  const double level = alpha / static_cast<double>(std::max<std::size_t>(num_candidates, 1));
  return chi2_quantile(dim, level);
}

EdgeTestReport select_edges(const DeviceGraph& candidates,
                            const std::vector<LocalFit>& fits, double alpha) {
  if (static_cast<int>(fits.size()) != candidates.num_nodes()) {
    throw ValidationError("need one local fit per device");
  }
  EdgeTestReport report;
  report.alpha = alpha;
  report.num_candidates = candidates.num_edges();
  const int dim = fits.empty() ? 1 : static_cast<int>(fits.front().theta_hat.size());
  report.threshold = bonferroni_threshold(dim, alpha, report.num_candidates);
  std::vector<std::pair<int, int>> kept;
  report.tests.reserve(candidates.num_edges());
  for (const auto& e : candidates.edges()) {
    EdgeTest t;
    t.edge = e;
    t.statistic = test_statistic(fits[static_cast<std::size_t>(e.plus)],
                                 fits[static_cast<std::size_t>(e.minus)]);
    t.threshold = report.threshold;
    t.keep = t.statistic <= t.threshold;
    if (t.keep) kept.emplace_back(e.plus, e.minus);
    report.tests.push_back(t);
  }
  report.selected = DeviceGraph::build(candidates.num_nodes(), kept);
  return report;
}

EdgeTestReport local_es_candidate_graph(const std::vector<LocalFit>& fits,
                                        double alpha) {
  if (fits.size() < 2) {
    throw ValidationError("edge selection needs at least two devices");
  }
  return select_edges(DeviceGraph::complete(static_cast<int>(fits.size())), fits,
                      alpha);
}

double signal_distance(const Vector& theta1, const Vector& theta2,
                       const Matrix& omega_plus, const Matrix& omega_minus,
                       double c_plus, double c_minus) {
  if (!(c_plus > 0.0 && c_plus <= 1.0 && c_minus > 0.0 && c_minus <= 1.0)) {
    throw ValidationError("sample-size ratios must lie in (0, 1]");
  }
  return std::sqrt(spd_quadratic_form(c_plus * omega_plus + c_minus * omega_minus,
                                      theta1 - theta2, "signal metric"));
}

SignalCheck minimum_signal_check(const Vector& theta1, const Vector& theta2,
                                 const Matrix& omega_plus,
                                 const Matrix& omega_minus, double c_plus,
                                 double c_minus, double n_e, double threshold) {
  SignalCheck check;
  check.distance =
      signal_distance(theta1, theta2, omega_plus, omega_minus, c_plus, c_minus);
  check.satisfied = n_e * check.distance * check.distance >= 4.0 * threshold;
  return check;
}

}  // namespace fedgraph
