#pragma once

#include "fedgraph/fedadmm.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace fedgraph {

enum class AvailabilityMode {
  independent,  ///< R_i(t) ~ Bernoulli(p_i) independently across devices
  shared_coin,  ///< one U(t) per iteration, R_i(t) = 1{U(t) <= p_i}
};

std::string_view to_string(AvailabilityMode m) noexcept;
AvailabilityMode parse_availability_mode(std::string_view name);

/// Random device accessibility with per-device rates p_i in (0, 1].
struct AvailabilityModel {
  std::vector<double> p;
  bool known = true;
  AvailabilityMode mode = AvailabilityMode::independent;

  static AvailabilityModel uniform(int num_devices, double p, bool known = true,
                                   AvailabilityMode mode = AvailabilityMode::independent);
  double min_rate() const;
  void validate(int num_devices) const;
};

/// Draws R(t); entry i is 1 when device i is online. Draws at distinct t use
/// independent streams.
std::vector<char> sample_availability(const AvailabilityModel& model, int t,
                                      Rng& rng);

/// Random stream for the availability draw of iteration t.
Rng availability_rng(std::uint64_t seed, int t);

/// Running estimate of the availability rates from observed R(s).
class AvailabilityEstimator {
 public:
  explicit AvailabilityEstimator(int num_devices);

  /// Records R(t) for the next iteration.
  void observe(const std::vector<char>& online);
  /// p_hat_i = (# online observations) / t, or 1 before any observation.
  double p_hat(int device) const;
  int observations() const noexcept { return t_; }
  const std::vector<int>& counts() const noexcept { return counts_; }

 private:
  std::vector<int> counts_;
  int t_ = 0;
};

/// p_hat(t + 1) = t^{-1} sum_{s <= t} R(s) for one device's history.
double estimate_p(const std::vector<char>& history);

/// Node update under random accessibility. Online devices take the node
/// step with the gradient reweighted by 1/p_u; offline devices apply only the
/// consensus part, theta - eta rho sum_j (theta - beta - alpha / rho), and
/// never touch their data.
Vector ipw_node_step(const DeviceGraph& g, int u, bool online,
                     const SolverState& state, const ModelSpec& spec,
                     const DeviceData& data, const SolverConfig& config,
                     double p_u, Rng& rng);

struct AvailabilityRunResult {
  Matrix theta_bar;
  SolverState state;
  std::vector<double> final_p_hat;  ///< empty when rates are known
  std::vector<int> online_counts;
};

/// Fed-ADMM with randomly inaccessible devices: per iteration draw S(t),
/// online devices run IPW node steps, the coordinator runs consensus-only
/// steps for offline devices and all edge steps, then (for unknown rates)
/// records R(t) to update p_hat.
AvailabilityRunResult run_with_availability(const DeviceGraph& g,
                                            const FederatedData& data,
                                            const SolverConfig& config,
                                            const AvailabilityModel& model,
                                            const IterationHook& hook = {});

}  // namespace fedgraph
