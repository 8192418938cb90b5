#include "fedgraph/synth.hpp"

#include <cmath>
#include <string>

namespace fedgraph {

namespace {
// Stream identifiers for keyed generators.
constexpr std::uint64_t kParamStream = 1;
constexpr std::uint64_t kCorruptStream = 2;
constexpr std::uint64_t kDeviceStream = 3;
}  // namespace

void SynthConfig::validate() const {
  if (num_devices < 1) throw ValidationError("synth.num_devices must be >= 1");
  if (num_clusters < 1 || num_clusters > num_devices) {
    throw ValidationError("synth.num_clusters must lie in 1..num_devices");
  }
  if (dim < 1) throw ValidationError("synth.dim must be >= 1");
  if (samples_per_device < 1) {
    throw ValidationError("synth.samples_per_device must be >= 1");
  }
  if (!(corruption >= 0.0 && corruption <= 1.0)) {
    throw ValidationError("synth.corruption must lie in [0, 1]");
  }
  if (!(sigma >= 0.0)) throw ValidationError("synth.sigma must be >= 0");
}

Clustering gen_clusters(int num_devices, int num_clusters) {
  if (num_clusters < 1 || num_clusters > num_devices) {
    throw ValidationError("cannot split " + std::to_string(num_devices) +
                          " devices into " + std::to_string(num_clusters) +
                          " clusters");
  }
  Clustering c;
  c.num_clusters = num_clusters;
  c.label.reserve(static_cast<std::size_t>(num_devices));
  const int base = num_devices / num_clusters;
  const int extra = num_devices % num_clusters;
  for (int k = 0; k < num_clusters; ++k) {
    const int size = base + (k < extra ? 1 : 0);
    c.label.insert(c.label.end(), static_cast<std::size_t>(size), k);
  }
  return c;
}

std::vector<Vector> gen_parameters(int num_clusters, int dim, Rng& rng) {
  // Covariance p^{-1/2} I, i.e. standard deviation p^{-1/4}.
  const double sd = std::pow(static_cast<double>(dim), -0.25);
  std::vector<Vector> params;
  params.reserve(static_cast<std::size_t>(num_clusters));
  for (int k = 0; k < num_clusters; ++k) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = sd * rng.normal();
    params.push_back(std::move(v));
  }
  return params;
}

Matrix assemble_theta(const Clustering& clustering,
                      const std::vector<Vector>& cluster_params) {
  const int p = cluster_params.empty() ? 0 : static_cast<int>(cluster_params[0].size());
  Matrix theta(clustering.num_nodes(), p);
  for (int u = 0; u < clustering.num_nodes(); ++u) {
    theta.row(u) = cluster_params.at(static_cast<std::size_t>(clustering.label[u])).transpose();
  }
  return theta;
}

DeviceData gen_device_data(const ModelSpec& spec, const Vector& theta, int n,
                           Rng& rng) {
  const int p = spec.dim;
  DeviceData d;
  d.x.resize(n, p);
  if (spec.family == Family::mean) {
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < p; ++i) d.x(k, i) = theta(i) + spec.sigma * rng.normal();
    }
    return d;
  }
  d.y.resize(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < p; ++i) d.x(k, i) = rng.normal();
    const double t = d.x.row(k).dot(theta);
    if (spec.family == Family::linear) {
      d.y(k) = t + rng.normal();
    } else {
      d.y(k) = rng.uniform() < sigmoid(t) ? 1.0 : 0.0;
    }
  }
  return d;
}

SynthInstance generate(const SynthConfig& config) {
  config.validate();
  SynthInstance inst;
  inst.clusters = gen_clusters(config.num_devices, config.num_clusters);
  inst.graph0 = characteristic_graph(inst.clusters);

  Rng param_rng = Rng::keyed(config.seed, {kParamStream});
  const auto params = gen_parameters(config.num_clusters, config.dim, param_rng);
  inst.theta_star = assemble_theta(inst.clusters, params);

  Rng corrupt_rng = Rng::keyed(config.seed, {kCorruptStream});
  inst.graph = corrupt_graph(inst.graph0, config.corruption, corrupt_rng);

  inst.data.spec = ModelSpec{config.family, config.dim, config.sigma > 0.0 ? config.sigma : 1.0};
  inst.data.devices.resize(static_cast<std::size_t>(config.num_devices));
  ModelSpec draw_spec = inst.data.spec;
  draw_spec.sigma = config.sigma;
  for (int u = 0; u < config.num_devices; ++u) {
    Rng device_rng = Rng::keyed(config.seed, {kDeviceStream, static_cast<std::uint64_t>(u)});
    inst.data.devices[u] = gen_device_data(
        draw_spec, inst.theta_star.row(u).transpose(), config.samples_per_device,
        device_rng);
  }
  return inst;
}

}  // namespace fedgraph
