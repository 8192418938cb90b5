#include "fedgraph/availability.hpp"

#include "fedgraph/parallel.hpp"

#include <algorithm>
#include <string>

namespace fedgraph {

namespace {
constexpr std::uint64_t kAvailabilityStream = 0x61766169ULL;
}  // namespace

std::string_view to_string(AvailabilityMode m) noexcept {
  return m == AvailabilityMode::independent ? "independent" : "shared_coin";
}

AvailabilityMode parse_availability_mode(std::string_view name) {
  if (name == "independent") return AvailabilityMode::independent;
  if (name == "shared_coin") return AvailabilityMode::shared_coin;
  throw ValidationError("unknown availability mode '" + std::string(name) + "'");
}

AvailabilityModel AvailabilityModel::uniform(int num_devices, double p, bool known,
                                             AvailabilityMode mode) {
  AvailabilityModel m;
  m.p.assign(static_cast<std::size_t>(num_devices), p);
  m.known = known;
  m.mode = mode;
  return m;
}

double AvailabilityModel::min_rate() const {
  return p.empty() ? 1.0 : *std::min_element(p.begin(), p.end());
}

void AvailabilityModel::validate(int num_devices) const {
  if (static_cast<int>(p.size()) != num_devices) {
    throw ValidationError("availability.p has " + std::to_string(p.size()) +
                          " entries for " + std::to_string(num_devices) +
                          " devices");
  }
  for (double v : p) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw ValidationError("availability rates must lie in (0, 1]");
    }
  }
}

Rng availability_rng(std::uint64_t seed, int t) {
  return Rng::keyed(seed, {kAvailabilityStream, static_cast<std::uint64_t>(t)});
}

std::vector<char> sample_availability(const AvailabilityModel& model, int /*t*/,
                                      Rng& rng) {
  std::vector<char> online(model.p.size(), 0);
  if (model.mode == AvailabilityMode::shared_coin) {
    const double u = rng.uniform();
    for (std::size_t i = 0; i < model.p.size(); ++i) {
      online[i] = u <= model.p[i] ? 1 : 0;
    }
    return online;
  }
  for (std::size_t i = 0; i < model.p.size(); ++i) {
    // p = 1 must be online with certainty; uniform() < 1 always holds.
    online[i] = rng.uniform() < model.p[i] ? 1 : 0;
  }
  return online;
}

AvailabilityEstimator::AvailabilityEstimator(int num_devices)
    : counts_(static_cast<std::size_t>(num_devices), 0) {}

void AvailabilityEstimator::observe(const std::vector<char>& online) {
  if (online.size() != counts_.size()) {
    throw ValidationError("availability observation has the wrong size");
  }
  for (std::size_t i = 0; i < online.size(); ++i) counts_[i] += online[i] ? 1 : 0;
  ++t_;
}

double AvailabilityEstimator::p_hat(int device) const {
  if (t_ == 0) return 1.0;
  return static_cast<double>(counts_.at(static_cast<std::size_t>(device))) / t_;
}

double estimate_p(const std::vector<char>& history) {
  if (history.empty()) return 1.0;
  const auto ones = std::count_if(history.begin(), history.end(),
                                  [](char r) { return r != 0; });
  return static_cast<double>(ones) / static_cast<double>(history.size());
}

Vector ipw_node_step(const DeviceGraph& g, int u, bool online,
                     const SolverState& state, const ModelSpec& spec,
                     const DeviceData& data, const SolverConfig& config,
                     double p_u, Rng& rng) {
  if (!(p_u > 0.0)) {
    throw ValidationError("availability rate of device " + std::to_string(u + 1) +
                          " must be positive");
  }
  if (online) {
    return node_step(g, u, state, spec, data, config, rng, 1.0 / p_u);
  }
  const Vector theta = state.theta.row(u).transpose();
  Vector next = theta - learning_rate(config.kappa, state.t) * config.rho *
                            consensus_term(g, u, state, config.rho);
  project_to_ball(next, config.projection_radius);
  return next;
}

AvailabilityRunResult run_with_availability(const DeviceGraph& g,
                                            const FederatedData& data,
                                            const SolverConfig& config,
                                            const AvailabilityModel& model,
                                            const IterationHook& hook) {
  config.validate(data);
  model.validate(data.num_devices());
  if (g.num_nodes() != data.num_devices()) {
    throw ValidationError("graph and dataset disagree on the device count");
  }
  AvailabilityRunResult result;
  SolverState& state = result.state;
  state = SolverState::zeros(g, data.spec.dim);
  AvailabilityEstimator estimator(data.num_devices());
  Matrix theta_next(state.theta.rows(), state.theta.cols());
  const auto nodes = static_cast<std::size_t>(g.num_nodes());

  for (int it = 0; it < config.iterations; ++it) {
    Rng avail = availability_rng(config.seed, state.t);
    const auto online = sample_availability(model, state.t, avail);
    std::vector<double> rate(nodes);
    for (std::size_t u = 0; u < nodes; ++u) {
      double r = model.known ? model.p[u] : estimator.p_hat(static_cast<int>(u));
      // An online device with no online history yet would get p_hat = 0;
      // count the current observation instead.
      if (!model.known && r <= 0.0) r = 1.0 / (estimator.observations() + 1);
      rate[u] = r;
    }
    parallel_for(nodes, config.threads, [&](std::size_t idx) {
      const int u = static_cast<int>(idx);
      Rng rng = node_rng(config.seed, u, state.t);
      theta_next.row(u) = ipw_node_step(g, u, online[idx] != 0, state, data.spec,
                                        data.devices[idx], config, rate[idx], rng)
                              .transpose();
    });
    if (config.log_messages) {
      for (int u = 0; u < g.num_nodes(); ++u) {
        if (!online[static_cast<std::size_t>(u)]) continue;
        state.message_log.push_back({kCoordinator, u, Payload::beta_alpha, state.t});
        state.message_log.push_back({u, kCoordinator, Payload::theta, state.t});
      }
    }
    // Edge steps run on the coordinator; finish_iteration does not log them
    // as device-to-device traffic.
    SolverConfig central = config;
    central.log_messages = false;
    finish_iteration(g, central, data.num_devices(), theta_next, state);
    estimator.observe(online);
    if (hook) hook(state);
  }
  result.theta_bar = state.average();
  result.online_counts = estimator.counts();
  if (!model.known) {
    for (int u = 0; u < data.num_devices(); ++u) {
      result.final_p_hat.push_back(estimator.p_hat(u));
    }
  }
  return result;
}

}  // namespace fedgraph
