#include "fedgraph/cross_validation.hpp"
#include "fedgraph/synth.hpp"

#include <gtest/gtest.h>

using namespace fedgraph;

namespace {

SynthInstance instance(int clusters, double corruption, std::uint64_t seed) {
  SynthConfig c;
  c.num_devices = 6;
  c.num_clusters = clusters;
  c.dim = 3;
  c.samples_per_device = 50;
  c.corruption = corruption;
  c.seed = seed;
  return generate(c);
}

bool consensus(const DeviceGraph& g, const Matrix& th) {
  for (const auto& e : g.edges()) {
    if ((th.row(e.plus) - th.row(e.minus)).lpNorm<Eigen::Infinity>() > 1e-6) return false;
  }
  return true;
}

}  // namespace

TEST(Cv, SinglePointGridIsReturned) {
  const auto inst = instance(2, 0.1, 1);
  CvOptions o;
  o.grid = {0.37};
  EXPECT_EQ(cross_validate_lambda(inst.graph, inst.data, o).lambda, 0.37);
}

TEST(Cv, InsufficientSamplesIsAnError) {
  auto inst = instance(2, 0.1, 2);
  inst.data.devices[3] = inst.data.devices[3].subset(std::vector<int>{0, 1, 2});
  CvOptions o;
  EXPECT_THROW(cross_validate_lambda(inst.graph, inst.data, o), ValidationError);
  o.folds = 1;
  EXPECT_THROW(cross_validate_lambda(inst.graph, instance(2, 0.1, 2).data, o), ValidationError);
}

TEST(Cv, LambdaMaxIsTheFusionThreshold) {
  for (EdgeNorm norm : {EdgeNorm::l1, EdgeNorm::l2}) {
    const auto inst = instance(2, 0.2, 3);
    CvOptions o;
    o.norm = norm;
    o.refine_steps = 12;
    const double lm = lambda_max(inst.graph, inst.data, o);
    ASSERT_GT(lm, 0.0);
    EXPECT_TRUE(consensus(inst.graph, reference_minimizer(inst.graph, inst.data, lm, norm).theta));
    EXPECT_FALSE(consensus(inst.graph, reference_minimizer(inst.graph, inst.data, 0.8 * lm, norm).theta));
  }
  EXPECT_EQ(lambda_max(DeviceGraph::empty(6), instance(2, 0.0, 3).data, CvOptions{}), 0.0);
}

TEST(Cv, GridIsLogSpacedAndScoresMatchArgmin) {
  const auto inst = instance(2, 0.1, 4);
  CvOptions o;
  const auto r = cross_validate_lambda(inst.graph, inst.data, o);
  ASSERT_EQ(r.grid.size(), 10u);
  EXPECT_NEAR(r.grid.front(), 1e-4 * r.lambda_max, 1e-12 * r.lambda_max);
  EXPECT_NEAR(r.grid.back(), r.lambda_max, 1e-12 * r.lambda_max);
  for (std::size_t i = 2; i < r.grid.size(); ++i) {
    EXPECT_NEAR(r.grid[i] / r.grid[i - 1], r.grid[1] / r.grid[0], 1e-9);
  }
  const auto best = std::min_element(r.scores.begin(), r.scores.end()) - r.scores.begin();
  EXPECT_EQ(r.lambda, r.grid[static_cast<std::size_t>(best)]);
  EXPECT_EQ(cross_validate_lambda(inst.graph, inst.data, o).lambda, r.lambda);
}

TEST(Cv, HomogeneousDevicesPreferLargeLambda) {
  int upper = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = instance(1, 0.0, 100 + rep);
    CvOptions o;
    o.seed = rep;
    const auto r = cross_validate_lambda(inst.graph, inst.data, o);
    const auto idx = std::find(r.grid.begin(), r.grid.end(), r.lambda) - r.grid.begin();
    upper += idx >= static_cast<long>(r.grid.size() / 2) ? 1 : 0;
  }
  EXPECT_GE(upper, 16);
}

TEST(Cv, SingletonClustersPreferSmallLambda) {
  int lower = 0;
  for (int rep = 0; rep < 20; ++rep) {
    // every device is its own well-separated cluster, on a complete graph
    FederatedData d;
    d.spec.dim = 3;
    for (int u = 0; u < 6; ++u) {
      Rng r = Rng::keyed(300 + rep, {static_cast<std::uint64_t>(u)});
      d.devices.push_back(gen_device_data(d.spec, Vector::Constant(3, 2.0 * u - 5.0), 50, r));
    }
    CvOptions o;
    o.seed = rep;
    const auto r = cross_validate_lambda(DeviceGraph::complete(6), d, o);
    const auto idx = std::find(r.grid.begin(), r.grid.end(), r.lambda) - r.grid.begin();
    lower += idx < static_cast<long>(r.grid.size() / 2) ? 1 : 0;
  }
  EXPECT_GE(lower, 16);
}
