#include "fedgraph/penalty.hpp"

#include <cmath>
#include <string>

namespace fedgraph {

std::string_view to_string(EdgeNorm n) noexcept {
  return n == EdgeNorm::l1 ? "l1" : "l2";
}

EdgeNorm parse_edge_norm(std::string_view name) {
  if (name == "l1") return EdgeNorm::l1;
  if (name == "l2") return EdgeNorm::l2;
  throw ValidationError("unknown edge norm '" + std::string(name) + "'");
}

double phi(EdgeNorm norm, const Vector& v) {
  return norm == EdgeNorm::l1 ? v.lpNorm<1>() : v.norm();
}

double fused_penalty(const DeviceGraph& g, const Matrix& theta, EdgeNorm norm) {
  if (theta.rows() != g.num_nodes()) {
    throw ValidationError("parameter matrix has " + std::to_string(theta.rows()) +
                          " rows, graph has " + std::to_string(g.num_nodes()) +
                          " nodes");
  }
  double total = 0.0;
  for (const auto& e : g.edges()) {
    total += phi(norm, (theta.row(e.plus) - theta.row(e.minus)).transpose());
  }
  return total;
}

double data_fidelity(const FederatedData& data, const Matrix& theta) {
  if (theta.rows() != data.num_devices()) {
    throw ValidationError("parameter matrix rows do not match device count");
  }
  double total = 0.0;
  for (int u = 0; u < data.num_devices(); ++u) {
    total += empirical_risk(data.spec, data.devices[u], theta.row(u).transpose());
  }
  return total / data.num_devices();
}

double objective(const DeviceGraph& g, const FederatedData& data,
                 const Matrix& theta, double lambda, EdgeNorm norm) {
  if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
  if (g.num_nodes() != data.num_devices()) {
    throw ValidationError("graph and dataset disagree on the device count");
  }
  return data_fidelity(data, theta) + lambda * fused_penalty(g, theta, norm);
}

Vector prox_phi(EdgeNorm norm, const Vector& v, double tau) {
  if (tau < 0.0) throw ValidationError("prox threshold must be nonnegative");
  if (norm == EdgeNorm::l1) {
    Vector s(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double mag = std::abs(v(i)) - tau;
      s(i) = mag > 0.0 ? std::copysign(mag, v(i)) : 0.0;
    }
    return s;
  }
  const double nv = v.norm();
  if (nv <= tau || nv == 0.0) return Vector::Zero(v.size());
  return (1.0 - tau / nv) * v;
}

std::pair<Vector, Vector> edge_prox(const Vector& a, const Vector& b,
                                    double lambda, double rho, EdgeNorm norm) {
  if (!(rho > 0.0)) throw ValidationError("rho must be positive");
  if (lambda == 0.0) return {a, b};
  const Vector mid = 0.5 * (a + b);
  const Vector half = 0.5 * prox_phi(norm, a - b, 2.0 * lambda / rho);
  return {mid + half, mid - half};
}

}  // namespace fedgraph
