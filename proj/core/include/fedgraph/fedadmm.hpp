#pragma once

#include "fedgraph/graph.hpp"
#include "fedgraph/models.hpp"
#include "fedgraph/penalty.hpp"
#include "fedgraph/rng.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

namespace fedgraph {

enum class NodeVariant { sgd_step, proximal_step };

std::string_view to_string(NodeVariant v) noexcept;
NodeVariant parse_node_variant(std::string_view name);

/// Settings of the decentralized stochastic ADMM solver.
///
/// `lambda` is the penalty weight of F(Theta) = |V|^{-1} sum_u M_u + lambda R.
/// Node steps use the unscaled device gradient, so the engine works on
/// |V| * F and the edge step thresholds with |V| * lambda (see
/// edge_penalty_weight).
struct SolverConfig {
  double rho = 1.0;
  double lambda = 0.0;
  double kappa = 1.0;   ///< learning rate eta(t) = kappa / t
  int batch_size = 10;  ///< 0 or n_u means full batch; must not exceed n_u
  int iterations = 1000;
  EdgeNorm norm = EdgeNorm::l1;
  std::uint64_t seed = 0;
  double projection_radius = std::numeric_limits<double>::infinity();
  NodeVariant variant = NodeVariant::sgd_step;
  int threads = 1;
  bool log_messages = false;

  void validate() const;
  /// Also checks batch_size against the smallest device.
  void validate(const FederatedData& data) const;
};

/// Penalty weight applied in the edge step for a graph over `num_devices`.
double edge_penalty_weight(const SolverConfig& config, int num_devices);

/// Learning rate used inside iteration t (0-based): kappa / (t + 1).
double learning_rate(double kappa, int t);

/// Auxiliary and dual variables of one undirected edge. The `plus` slots
/// belong to the edge's larger endpoint, the `minus` slots to the smaller.
struct EdgeSlots {
  Vector beta_plus;
  Vector beta_minus;
  Vector alpha_plus;
  Vector alpha_minus;
};

enum class Payload : std::uint8_t { theta, beta_alpha };

/// Sender id of the simulated coordinator.
inline constexpr int kCoordinator = -1;

/// One logged parameter transfer.
struct Message {
  int sender = 0;
  int receiver = 0;
  Payload kind = Payload::theta;
  int t = 0;

  friend bool operator==(const Message&, const Message&) = default;
};

struct SolverState {
  Matrix theta;                  ///< Theta(t), |V| x p
  std::vector<EdgeSlots> edges;  ///< one entry per edge of the graph
  int t = 0;                     ///< completed iterations
  Matrix theta_sum;              ///< sum of Theta(0..t-1)
  std::vector<Message> message_log;

  /// Theta(0) = B(0) = alpha(0) = 0.
  static SolverState zeros(const DeviceGraph& g, int dim);
  /// Running average T^{-1} sum_{s<T} Theta(s); zero matrix before any step.
  Matrix average() const;
};

/// sum_{j in N_u} (theta_u - beta_uj - alpha_uj / rho).
Vector consensus_term(const DeviceGraph& g, int u, const SolverState& state,
                      double rho);

/// sum_{j in N_u} (beta_uj + alpha_uj / rho).
Vector consensus_anchor(const DeviceGraph& g, int u, const SolverState& state,
                        double rho);

/// Mini-batch gradient for device u: a uniform sample without replacement
/// of `batch_size` rows, or the full-batch gradient when batch_size is 0 or
/// n_u. Throws ValidationError when batch_size > n_u.
Vector stochastic_gradient(const ModelSpec& spec, const DeviceData& data,
                           const Vector& theta, int batch_size, Rng& rng);

/// theta - eta (g + rho * consensus).
Vector sgd_node_update(const Vector& theta, const Vector& gradient,
                       const Vector& consensus, double eta, double rho);

/// Minimizer of g^T x + rho/2 sum_j ||x - anchor_j||^2 + ||x - theta||^2 / (2 eta_tilde):
/// (theta / eta_tilde + rho * anchor_sum - g) / (1 / eta_tilde + rho * degree).
Vector proximal_node_update(const Vector& theta, const Vector& gradient,
                            const Vector& anchor_sum, int degree,
                            double eta_tilde, double rho);

/// Random stream of device u in iteration t.
Rng node_rng(std::uint64_t seed, int u, int t);

/// Node step of device u for iteration state.t. `gradient_weight` scales
/// the stochastic gradient (1 for plain Fed-ADMM, 1/p_u for inverse
/// probability weighting).
Vector node_step(const DeviceGraph& g, int u, const SolverState& state,
                 const ModelSpec& spec, const DeviceData& data,
                 const SolverConfig& config, Rng& rng,
                 double gradient_weight = 1.0);

/// Proximal form of the node step with step size eta_tilde = kappa / (t+1).
Vector proximal_node_step(const DeviceGraph& g, int u, const SolverState& state,
                          const ModelSpec& spec, const DeviceData& data,
                          const SolverConfig& config, Rng& rng);

/// Edge step: beta by the joint proximal update, then
/// alpha <- alpha - rho (theta_new - beta_new) on both ends.
EdgeSlots edge_step(const Vector& theta_plus_new, const Vector& theta_minus_new,
                    const EdgeSlots& slots, double penalty_weight,
                    const SolverConfig& config);

/// Runs all edge steps against the freshly computed Theta(t+1), then commits
/// the iteration: adds Theta(t) to the running sum, installs Theta(t+1) and
/// advances t.
void finish_iteration(const DeviceGraph& g, const SolverConfig& config,
                      int num_devices, Matrix theta_next, SolverState& state);

using IterationHook = std::function<void(const SolverState&)>;

struct RunResult {
  Matrix theta_bar;  ///< T^{-1} sum_{t=1..T} Theta(t-1)
  SolverState state;
};

/// Decentralized stochastic ADMM. Each iteration is one superstep: all node
/// steps (parallel), barrier, all edge steps (parallel), barrier. `hook` is
/// called after every completed iteration.
RunResult run(const DeviceGraph& g, const FederatedData& data,
              const SolverConfig& config, const IterationHook& hook = {});

/// Messages that neither stay on one device, involve the coordinator, nor
/// cross an edge of g.
std::vector<Message> message_audit(const DeviceGraph& g,
                                   const SolverState& state);

// --- deterministic reference solver ---

struct ReferenceOptions {
  double tol = 1e-11;
  int max_iter = 500000;
  double rho = 1.0;
  bool adaptive_rho = true;
};

struct ReferenceResult {
  Matrix theta;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double kkt_residual = 0.0;
};

/// Minimizer of F(Theta) by full-batch ADMM with exact node minimization.
/// Stops once primal and dual residuals are <= tol and the stationarity
/// residual of |V| F is <= 10 tol; throws NumericError otherwise.
ReferenceResult reference_minimizer(const DeviceGraph& g,
                                    const FederatedData& data, double lambda,
                                    EdgeNorm norm,
                                    const ReferenceOptions& options = {});

}  // namespace fedgraph
