#pragma once

#include "fedgraph/graph.hpp"
#include "fedgraph/models.hpp"

#include <cstdint>
#include <vector>

namespace fedgraph {

/// Parameters of the clustered synthetic data-generating process.
struct SynthConfig {
  int num_devices = 20;
  int num_clusters = 5;
  int dim = 20;
  int samples_per_device = 100;
  Family family = Family::linear;
  double sigma = 1.0;       ///< noise scale for the mean family
  double corruption = 0.1;  ///< probability of flipping each device pair
  std::uint64_t seed = 0;

  void validate() const;
};

/// Contiguous, balanced blocks: the first |V| mod K clusters get one extra
/// device.
Clustering gen_clusters(int num_devices, int num_clusters);

/// K i.i.d. vectors from N(0, p^{-1/2} I_p).
std::vector<Vector> gen_parameters(int num_clusters, int dim, Rng& rng);

/// Rows theta*_u = cluster_params[label(u)].
Matrix assemble_theta(const Clustering& clustering,
                      const std::vector<Vector>& cluster_params);

/// Draws n samples from the device's model at `theta`: x ~ N(0, I);
/// linear y = x^T theta + N(0, 1); logistic y ~ Bernoulli(sigmoid(x^T theta));
/// mean z = theta + N(0, sigma^2 I).
DeviceData gen_device_data(const ModelSpec& spec, const Vector& theta, int n,
                           Rng& rng);

/// Everything one synthetic replication produces.
struct SynthInstance {
  Clustering clusters;
  DeviceGraph graph0;  ///< characteristic graph
  DeviceGraph graph;   ///< corrupted surrogate handed to the solver
  Matrix theta_star;
  FederatedData data;
};

/// Runs the full pipeline. Every random component draws from its own keyed
/// stream (parameters, corruption, and one stream per device), so results do
/// not depend on generation order.
SynthInstance generate(const SynthConfig& config);

}  // namespace fedgraph
