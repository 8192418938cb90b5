#include "fedgraph/fedadmm.hpp"

#include "fedgraph/parallel.hpp"

#include <cmath>
#include <string>

namespace fedgraph {

namespace {
constexpr std::uint64_t kBatchStream = 0x62617463ULL;
}  // namespace

std::string_view to_string(NodeVariant v) noexcept {
  return v == NodeVariant::sgd_step ? "sgd_step" : "proximal_step";
}

NodeVariant parse_node_variant(std::string_view name) {
  if (name == "sgd_step") return NodeVariant::sgd_step;
  if (name == "proximal_step") return NodeVariant::proximal_step;
  throw ValidationError("unknown node-step variant '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (!(rho > 0.0)) throw ValidationError("solver.rho must be positive");
  if (!(lambda >= 0.0)) throw ValidationError("solver.lambda must be nonnegative");
  if (!(kappa > 0.0)) throw ValidationError("solver.kappa must be positive");
  if (batch_size < 0) {
    throw ValidationError("solver.batch_size must be >= 0 (0 = full batch)");
  }
  if (iterations < 1) throw ValidationError("solver.iterations must be >= 1");
  if (!(projection_radius > 0.0)) {
    throw ValidationError("solver.projection_radius must be positive");
  }
  if (threads < 1) throw ValidationError("solver.threads must be >= 1");
}

void SolverConfig::validate(const FederatedData& data) const {
  validate();
  for (std::size_t u = 0; u < data.devices.size(); ++u) {
    if (batch_size > data.devices[u].size()) {
      throw ValidationError("solver.batch_size " + std::to_string(batch_size) +
                            " exceeds the " + std::to_string(data.devices[u].size()) +
                            " samples of device " + std::to_string(u + 1));
    }
  }
}

double edge_penalty_weight(const SolverConfig& config, int num_devices) {
  return config.lambda * static_cast<double>(num_devices);
}

double learning_rate(double kappa, int t) {
  return kappa / static_cast<double>(t + 1);
}

SolverState SolverState::zeros(const DeviceGraph& g, int dim) {
  SolverState s;
  s.theta = Matrix::Zero(g.num_nodes(), dim);
  s.theta_sum = Matrix::Zero(g.num_nodes(), dim);
  const Vector z = Vector::Zero(dim);
  s.edges.assign(g.num_edges(), EdgeSlots{z, z, z, z});
  return s;
}

Matrix SolverState::average() const {
  if (t == 0) return Matrix::Zero(theta.rows(), theta.cols());
  return theta_sum / static_cast<double>(t);
}

Vector consensus_term(const DeviceGraph& g, int u, const SolverState& state,
                      double rho) {
  const Vector theta = state.theta.row(u).transpose();
  Vector acc = Vector::Zero(theta.size());
  for (const auto& inc : g.incident(u)) {
    const auto& slot = state.edges[static_cast<std::size_t>(inc.edge)];
    const Vector& beta = inc.is_plus ? slot.beta_plus : slot.beta_minus;
    const Vector& alpha = inc.is_plus ? slot.alpha_plus : slot.alpha_minus;
    acc += theta - beta - alpha / rho;
  }
  return acc;
}

Vector consensus_anchor(const DeviceGraph& g, int u, const SolverState& state,
                        double rho) {
  Vector acc = Vector::Zero(state.theta.cols());
  for (const auto& inc : g.incident(u)) {
    const auto& slot = state.edges[static_cast<std::size_t>(inc.edge)];
    const Vector& beta = inc.is_plus ? slot.beta_plus : slot.beta_minus;
    const Vector& alpha = inc.is_plus ? slot.alpha_plus : slot.alpha_minus;
    acc += beta + alpha / rho;
  }
  return acc;
}

Vector stochastic_gradient(const ModelSpec& spec, const DeviceData& data,
                           const Vector& theta, int batch_size, Rng& rng) {
  const auto n = static_cast<std::size_t>(data.size());
  if (batch_size < 0 || static_cast<std::size_t>(batch_size) > n) {
    throw ValidationError("batch size " + std::to_string(batch_size) +
                          " exceeds the device's " + std::to_string(n) +
                          " samples");
  }
  if (batch_size == 0 || static_cast<std::size_t>(batch_size) == n) {
    return risk_gradient(spec, data, theta);
  }
  std::vector<int> scratch;
  std::vector<int> rows;
  sample_without_replacement(rng, n, static_cast<std::size_t>(batch_size),
                             scratch, rows);
  return batch_gradient(spec, data, theta, rows);
}

Vector sgd_node_update(const Vector& theta, const Vector& gradient,
                       const Vector& consensus, double eta, double rho) {
  return theta - eta * (gradient + rho * consensus);
}

Vector proximal_node_update(const Vector& theta, const Vector& gradient,
                            const Vector& anchor_sum, int degree,
                            double eta_tilde, double rho) {
  if (!(eta_tilde > 0.0)) {
    throw ValidationError("proximal step size must be positive");
  }
  return (theta / eta_tilde + rho * anchor_sum - gradient) /
         (1.0 / eta_tilde + rho * degree);
}

Rng node_rng(std::uint64_t seed, int u, int t) {
  return Rng::keyed(seed, {kBatchStream, static_cast<std::uint64_t>(u),
                           static_cast<std::uint64_t>(t)});
}

Vector node_step(const DeviceGraph& g, int u, const SolverState& state,
                 const ModelSpec& spec, const DeviceData& data,
                 const SolverConfig& config, Rng& rng, double gradient_weight) {
  const Vector theta = state.theta.row(u).transpose();
  Vector grad =
      stochastic_gradient(spec, data, theta, config.batch_size, rng);
  if (gradient_weight != 1.0) grad *= gradient_weight;
  Vector next = sgd_node_update(theta, grad, consensus_term(g, u, state, config.rho),
                                learning_rate(config.kappa, state.t), config.rho);
  project_to_ball(next, config.projection_radius);
  return next;
}

Vector proximal_node_step(const DeviceGraph& g, int u, const SolverState& state,
                          const ModelSpec& spec, const DeviceData& data,
                          const SolverConfig& config, Rng& rng) {
  const Vector theta = state.theta.row(u).transpose();
  const Vector grad =
      stochastic_gradient(spec, data, theta, config.batch_size, rng);
  Vector next = proximal_node_update(theta, grad,
                                     consensus_anchor(g, u, state, config.rho),
                                     g.degree(u),
                                     learning_rate(config.kappa, state.t),
                                     config.rho);
  project_to_ball(next, config.projection_radius);
  return next;
}

EdgeSlots edge_step(const Vector& theta_plus_new, const Vector& theta_minus_new,
                    const EdgeSlots& slots, double penalty_weight,
                    const SolverConfig& config) {
  const double rho = config.rho;
  EdgeSlots out;
  auto [bp, bm] = edge_prox(theta_plus_new - slots.alpha_plus / rho,
                            theta_minus_new - slots.alpha_minus / rho,
                            penalty_weight, rho, config.norm);
  project_to_ball(bp, config.projection_radius);
  project_to_ball(bm, config.projection_radius);
  out.alpha_plus = slots.alpha_plus - rho * (theta_plus_new - bp);
  out.alpha_minus = slots.alpha_minus - rho * (theta_minus_new - bm);
  out.beta_plus = std::move(bp);
  out.beta_minus = std::move(bm);
  return out;
}

namespace {

void log_node_reads(const DeviceGraph& g, int u, SolverState& state) {
  for (const auto& inc : g.incident(u)) {
    // Slots of an edge live on its plus end; the minus end receives them.
    const int owner = inc.is_plus ? u : inc.neighbor;
    state.message_log.push_back({owner, u, Payload::beta_alpha, state.t});
  }
}

}  // namespace

void finish_iteration(const DeviceGraph& g, const SolverConfig& config,
                      int num_devices, Matrix theta_next, SolverState& state) {
  const double weight = edge_penalty_weight(config, num_devices);
  const auto& edges = g.edges();
  std::vector<EdgeSlots> next_slots(edges.size());
  parallel_for(edges.size(), config.threads, [&](std::size_t e) {
    next_slots[e] = edge_step(theta_next.row(edges[e].plus).transpose(),
                              theta_next.row(edges[e].minus).transpose(),
                              state.edges[e], weight, config);
  });
  if (config.log_messages) {
    for (const auto& edge : edges) {
      state.message_log.push_back({edge.minus, edge.plus, Payload::theta, state.t});
    }
  }
  state.edges = std::move(next_slots);
  state.theta_sum += state.theta;
  state.theta = std::move(theta_next);
  ++state.t;
}

RunResult run(const DeviceGraph& g, const FederatedData& data,
              const SolverConfig& config, const IterationHook& hook) {
  config.validate(data);
  if (g.num_nodes() != data.num_devices()) {
    throw ValidationError("graph has " + std::to_string(g.num_nodes()) +
                          " nodes but the dataset has " +
                          std::to_string(data.num_devices()) + " devices");
  }
  RunResult result;
  SolverState& state = result.state;
  state = SolverState::zeros(g, data.spec.dim);
  const auto nodes = static_cast<std::size_t>(g.num_nodes());
  Matrix theta_next(state.theta.rows(), state.theta.cols());

  for (int it = 0; it < config.iterations; ++it) {
    parallel_for(nodes, config.threads, [&](std::size_t idx) {
      const int u = static_cast<int>(idx);
      Rng rng = node_rng(config.seed, u, state.t);
      theta_next.row(u) =
          (config.variant == NodeVariant::sgd_step
               ? node_step(g, u, state, data.spec, data.devices[idx], config, rng)
               : proximal_node_step(g, u, state, data.spec, data.devices[idx],
                                    config, rng))
              .transpose();
    });
    if (config.log_messages) {
      for (int u = 0; u < g.num_nodes(); ++u) log_node_reads(g, u, state);
    }
    finish_iteration(g, config, data.num_devices(), theta_next, state);
    if (hook) hook(state);
  }
  result.theta_bar = state.average();
  return result;
}

std::vector<Message> message_audit(const DeviceGraph& g,
                                   const SolverState& state) {
  std::vector<Message> violations;
  for (const auto& m : state.message_log) {
    if (m.sender == m.receiver) continue;
    if (m.sender == kCoordinator || m.receiver == kCoordinator) continue;
    if (!g.has_edge(m.sender, m.receiver)) violations.push_back(m);
  }
  return violations;
}

}  // namespace fedgraph
