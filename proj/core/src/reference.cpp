#include "fedgraph/fedadmm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace fedgraph {

namespace {

// Exact minimizer of M_u(x) + rho/2 * sum_j ||x - c_j||^2 given the anchor
// sum S = sum_j c_j and degree N. Linear systems are cached per rho.
class NodeSolver {
 public:
  NodeSolver(const ModelSpec& spec, const DeviceData& data, int degree)
      : spec_(spec), data_(data), degree_(degree) {
    const auto n = static_cast<double>(data.size());
    if (spec.family == Family::mean) {
      mean_ = data.x.colwise().mean().transpose();
    } else if (spec.family == Family::linear) {
      gram_ = data.x.transpose() * data.x / n;
      xty_ = data.x.transpose() * data.y / n;
    }
  }

  Vector solve(const Vector& anchor_sum, double rho, const Vector& warm) {
    switch (spec_.family) {
      case Family::mean: {
        const double w = 1.0 / (spec_.sigma * spec_.sigma);
        return (w * mean_ + rho * anchor_sum) / (w + rho * degree_);
      }
      case Family::linear: {
        if (!factor_ || factor_rho_ != rho) {
          Matrix a = gram_;
          a.diagonal().array() += rho * degree_;
          factor_.emplace(spd_factor(a, "reference node system"));
          factor_rho_ = rho;
        }
        return factor_->llt.solve(xty_ + rho * anchor_sum);
      }
      case Family::logistic:
        return newton(anchor_sum, rho, warm);
    }
    return warm;
  }

 private:
  Vector newton(const Vector& anchor_sum, double rho, const Vector& warm) {
    Vector x = warm;
    auto value = [&](const Vector& v) {
      double val = empirical_risk(spec_, data_, v);
      val += 0.5 * rho * degree_ * v.squaredNorm() - rho * anchor_sum.dot(v);
      return val;
    };
    double fx = value(x);
    for (int it = 0; it < 100; ++it) {
      const Vector grad = risk_gradient(spec_, data_, x) + rho * degree_ * x -
                          rho * anchor_sum;
      if (grad.norm() <= 1e-13 * std::max(1.0, x.norm())) break;
      Matrix h = empirical_hessian(spec_, data_, x);
      h.diagonal().array() += rho * degree_;
      const Vector step = spd_solve(h, grad, "reference Newton Hessian");
      if (step.norm() <= 1e-15 * std::max(1.0, x.norm())) break;
      // Close to the optimum the decrease is below rounding in f, so a line
      // search cannot tell good steps from bad; take the full Newton step.
      if (grad.dot(step) <= 1e-10 * std::max(1.0, std::abs(fx))) {
        x -= step;
        fx = value(x);
        continue;
      }
      double scale = 1.0;
      Vector cand = x - step;
      double fc = value(cand);
      for (int k = 0; k < 30 && fc > fx; ++k) {
        scale *= 0.5;
        cand = x - scale * step;
        fc = value(cand);
      }
      if (fc > fx) break;
      x = cand;
      fx = fc;
    }
    return x;
  }

  const ModelSpec& spec_;
  const DeviceData& data_;
  int degree_;
  Vector mean_;
  Matrix gram_;
  Vector xty_;
  std::optional<SpdFactor> factor_;
  double factor_rho_ = 0.0;
};

// Projection of g onto the subdifferential of phi at d. Differences at or
// below `zero` count as fused: near the fusion threshold the l2 prox can
// leave rounding-sized d whose direction means nothing.
Vector project_subgradient(EdgeNorm norm, const Vector& d, const Vector& g, double zero) {
  Vector out(g.size());
  if (norm == EdgeNorm::l1) {
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      out(i) = std::abs(d(i)) > zero ? std::copysign(1.0, d(i)) : std::clamp(g(i), -1.0, 1.0);
    }
    return out;
  }
  const double nd = d.norm();
  if (nd > zero) return d / nd;
  const double ng = g.norm();
  return ng > 1.0 ? Vector(g / ng) : g;
}

}  // namespace

ReferenceResult reference_minimizer(const DeviceGraph& g,
                                    const FederatedData& data, double lambda,
                                    EdgeNorm norm,
                                    const ReferenceOptions& options) {
  data.validate();
  if (g.num_nodes() != data.num_devices()) {
    throw ValidationError("graph and dataset disagree on the device count");
  }
  if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
  const int nv = data.num_devices();
  const int p = data.spec.dim;
  // Work on |V| F so node problems are O(1)-scaled.
  const double weight = lambda * nv;

  std::vector<NodeSolver> solvers;
  solvers.reserve(static_cast<std::size_t>(nv));
  for (int u = 0; u < nv; ++u) solvers.emplace_back(data.spec, data.devices[u], g.degree(u));

  SolverState state = SolverState::zeros(g, p);
  double rho = options.rho;
  ReferenceResult result;
  SolverConfig edge_config;
  edge_config.norm = norm;

  const int adapt_until = options.adaptive_rho ? std::min(options.max_iter / 2, 5000) : 0;

  for (int it = 1; it <= options.max_iter; ++it) {
    edge_config.rho = rho;
    for (int u = 0; u < nv; ++u) {
      state.theta.row(u) =
          solvers[u]
              .solve(consensus_anchor(g, u, state, rho), rho,
                     state.theta.row(u).transpose())
              .transpose();
    }
    double primal_sq = 0.0;
    double dual_sq = 0.0;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const auto& edge = g.edges()[e];
      const Vector tp = state.theta.row(edge.plus).transpose();
      const Vector tm = state.theta.row(edge.minus).transpose();
      EdgeSlots next = edge_step(tp, tm, state.edges[e], weight, edge_config);
      primal_sq += (tp - next.beta_plus).squaredNorm() + (tm - next.beta_minus).squaredNorm();
      dual_sq += (next.beta_plus - state.edges[e].beta_plus).squaredNorm() +
                 (next.beta_minus - state.edges[e].beta_minus).squaredNorm();
      state.edges[e] = std::move(next);
    }
    result.primal_residual = std::sqrt(primal_sq);
    result.dual_residual = rho * std::sqrt(dual_sq);
    result.iterations = it;

    if (result.primal_residual <= options.tol && result.dual_residual <= options.tol) {
      // Stationarity of |V| F with subgradients recovered from the duals.
      std::vector<Vector> sub(g.num_edges());
      const double zero = 1e-9 * std::max(1.0, state.theta.lpNorm<Eigen::Infinity>());
      for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const auto& s = state.edges[e];
        const Vector d = s.beta_plus - s.beta_minus;
        sub[e] = weight > 0.0
                     ? project_subgradient(norm, d, (s.alpha_minus - s.alpha_plus) / (2.0 * weight), zero)
                     : Vector(Vector::Zero(p));
      }
      double kkt = 0.0;
      for (int u = 0; u < nv; ++u) {
        Vector r = risk_gradient(data.spec, data.devices[u], state.theta.row(u).transpose());
        for (const auto& inc : g.incident(u)) {
          r += (inc.is_plus ? weight : -weight) * sub[static_cast<std::size_t>(inc.edge)];
        }
        kkt = std::max(kkt, r.lpNorm<Eigen::Infinity>());
      }
      result.kkt_residual = kkt;
      if (kkt <= 10.0 * options.tol) {
        result.theta = state.theta;
        return result;
      }
    }

    if (it < adapt_until && it % 10 == 0) {
      if (result.primal_residual > 10.0 * result.dual_residual) {
        rho *= 2.0;
      } else if (result.dual_residual > 10.0 * result.primal_residual) {
        rho *= 0.5;
      }
    }
  }
  throw NumericError("reference solver did not converge within " +
                     std::to_string(options.max_iter) +
                     " iterations (primal " + std::to_string(result.primal_residual) +
                     ", dual " + std::to_string(result.dual_residual) + ", kkt " +
                     std::to_string(result.kkt_residual) + ")");
}

}  // namespace fedgraph
