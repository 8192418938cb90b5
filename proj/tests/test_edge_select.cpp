#include "fedgraph/baselines.hpp"
#include "fedgraph/edge_select.hpp"
#include "fedgraph/synth.hpp"
#include "oracles.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace fedgraph;

namespace {

LocalFit fit_of(const Vector& theta, const Matrix& omega) {
  LocalFit f;
  f.theta_hat = theta;
  f.omega_hat = omega;
  f.converged = true;
  return f;
}

FederatedData linear_data(const Matrix& theta, int n, std::uint64_t seed) {
  FederatedData d;
  d.spec.family = Family::linear;
  d.spec.dim = static_cast<int>(theta.cols());
  for (int u = 0; u < theta.rows(); ++u) {
    Rng r = Rng::keyed(seed, {static_cast<std::uint64_t>(u)});
    d.devices.push_back(gen_device_data(d.spec, theta.row(u).transpose(), n, r));
  }
  return d;
}

}  // namespace

TEST(TestStatistic, TrivialCases) {
  const Vector a = Vector::LinSpaced(3, 0, 1);
  const Matrix half = 0.5 * Matrix::Identity(3, 3);
  EXPECT_EQ(test_statistic(fit_of(a, half), fit_of(a, half)), 0.0);
  const Vector b = a + Vector::Constant(3, 2.0);
  EXPECT_NEAR(test_statistic(fit_of(a, half), fit_of(b, half)), 12.0, 1e-12);
}

TEST(TestStatistic, MatchesExplicitInverse) {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 50; ++rep) {
    const int p = 1 + rep % 6;
    const Matrix o1 = oracle::random_spd(gen, p), o2 = oracle::random_spd(gen, p);
    const Vector t1 = oracle::random_vector(gen, p), t2 = oracle::random_vector(gen, p);
    const Vector d = t1 - t2;
    const double want = d.dot(oracle::gauss_jordan_inverse(o1 + o2) * d);
    EXPECT_NEAR(test_statistic(fit_of(t1, o1), fit_of(t2, o2)), want, 1e-9 * std::max(1.0, want));
  }
}

TEST(Selection, ThresholdAgreesWithBoost) {
  for (int p : {1, 5, 20}) {
    for (std::size_t ne : {1u, 10u, 190u}) {
      boost::math::chi_squared dist(p);
      const double want = boost::math::quantile(boost::math::complement(dist, 0.05 / ne));
      EXPECT_NEAR(bonferroni_threshold(p, 0.05, ne), want, 1e-8 * want);
    }
  }
  EXPECT_THROW(bonferroni_threshold(2, 0.0, 3), ValidationError);
}

TEST(Selection, KeepsZeroStatisticsAndDropsLargeOnes) {
  const auto g = DeviceGraph::complete(4);
  const Matrix eye = Matrix::Identity(2, 2);
  std::vector<LocalFit> same(4, fit_of(Vector::Zero(2), eye));
  const auto all = select_edges(g, same, 0.05);
  EXPECT_EQ(all.selected, g);
  std::vector<LocalFit> apart;
  for (int u = 0; u < 4; ++u) apart.push_back(fit_of(Vector::Constant(2, 100.0 * u), eye));
  const auto none = select_edges(g, apart, 0.05);
  EXPECT_EQ(none.selected.num_edges(), 0u);
  for (const auto& t : none.tests) EXPECT_EQ(t.keep, t.statistic <= t.threshold);
}

TEST(Selection, TieAtThresholdIsKept) {
  const double thr = bonferroni_threshold(1, 0.05, 1);
  const Matrix half = 0.5 * Matrix::Identity(1, 1);
  Vector a(1), b(1);
  a << 0.0;
  b << std::sqrt(thr);
  const auto g = DeviceGraph::build(2, {{0, 1}});
  const auto r = select_edges(g, {fit_of(a, half), fit_of(b, half)}, 0.05);
  ASSERT_EQ(r.tests.size(), 1u);
  // the statistic is thr up to rounding; compare on the same side the code does
  EXPECT_EQ(r.tests[0].keep, r.tests[0].statistic <= r.threshold);
  EXPECT_NEAR(r.tests[0].statistic, thr, 1e-9 * thr);
}

TEST(Selection, LargerAlphaNeverShrinksRejections) {
  SynthConfig c;
  c.num_devices = 8;
  c.num_clusters = 3;
  c.dim = 2;
  c.samples_per_device = 40;
  c.seed = 3;
  const auto inst = generate(c);
  const auto fits = local_all(inst.data).fits;
  std::size_t prev_rejected = 0;
  for (double a : {0.001, 0.01, 0.05, 0.2, 0.5}) {
    const auto r = select_edges(inst.graph, fits, a);
    const std::size_t rejected = r.num_candidates - r.selected.num_edges();
    EXPECT_GE(rejected, prev_rejected);
    prev_rejected = rejected;
  }
}

TEST(Selection, SubsetOfCandidates) {
  SynthConfig c;
  c.num_devices = 10;
  c.num_clusters = 3;
  c.dim = 3;
  c.samples_per_device = 50;
  c.corruption = 0.3;
  c.seed = 8;
  const auto inst = generate(c);
  const auto r = select_edges(inst.graph, local_all(inst.data).fits, 0.05);
  for (const auto& e : r.selected.edges()) EXPECT_TRUE(inst.graph.has_edge(e.plus, e.minus));
}

TEST(Selection, StrongSignalRecoversTruth) {
  int exact = 0;
  for (int rep = 0; rep < 100; ++rep) {
    SynthConfig c;
    c.num_devices = 10;
    c.num_clusters = 3;
    c.dim = 3;
    c.samples_per_device = 200;
    c.corruption = 0.3;
    c.seed = 100 + rep;
    const auto inst = generate(c);
    const auto r = select_edges(inst.graph, local_all(inst.data).fits, 0.05);
    exact += r.selected == intersect(inst.graph, inst.graph0) ? 1 : 0;
  }
  EXPECT_GE(exact, 90);
}

TEST(Selection, NullRejectionRateIsCalibrated) {
  const int reps = 2000;
  int rejected = 0;
  const Matrix theta = Matrix::Constant(2, 5, 0.3);
  const auto g = DeviceGraph::build(2, {{0, 1}});
  for (int rep = 0; rep < reps; ++rep) {
    const auto d = linear_data(theta, 500, 5000 + rep);
    const auto r = select_edges(g, local_all(d).fits, 0.05);
    rejected += r.selected.num_edges() == 0 ? 1 : 0;
  }
  const double freq = double(rejected) / reps;
  EXPECT_GE(freq, 0.03);
  EXPECT_LE(freq, 0.08);
}

TEST(Selection, StatisticIsScaleInvariant) {
  Matrix theta(2, 3);
  theta << 0.2, -0.1, 0.4, 0.5, 0.0, 0.1;
  auto d = linear_data(theta, 100, 77);
  const auto g = DeviceGraph::build(2, {{0, 1}});
  const double base = select_edges(g, local_all(d).fits, 0.05).tests[0].statistic;
  // y -> c y scales theta_hat by c; the plug-in covariance must follow with c^2
  for (auto& dev : d.devices) dev.y *= 3.0;
  auto fits = local_all(d).fits;
  for (auto& f : fits) f.omega_hat *= 9.0;
  const double scaled = select_edges(g, fits, 0.05).tests[0].statistic;
  EXPECT_NEAR(scaled, base, 1e-8 * base);
}

TEST(LocalEs, HomogeneousDevicesGiveOneComponent) {
  int single = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = linear_data(Matrix::Constant(6, 3, 0.5), 300, 900 + rep);
    const auto r = local_es_candidate_graph(local_all(d).fits, 0.05);
    EXPECT_EQ(r.num_candidates, 15u);
    single += component_count(r.selected) == 1 ? 1 : 0;
  }
  EXPECT_GE(single, 18);
}

TEST(LocalEs, TwoSeparatedClustersAreRecovered) {
  int recovered = 0;
  Matrix theta(6, 2);
  theta << 1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1;
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = linear_data(theta, 200, 1900 + rep);
    const auto r = local_es_candidate_graph(local_all(d).fits, 0.05);
    const auto cc = connected_components(r.selected);
    recovered += cc.num_clusters == 2 && cc.label[0] == cc.label[2] && cc.label[3] == cc.label[5] &&
                         cc.label[0] != cc.label[3]
                     ? 1
                     : 0;
  }
  EXPECT_GE(recovered, 18);
}

TEST(LocalEs, TwoDevicesSinglePair) {
  const Matrix eye = Matrix::Identity(2, 2);
  const auto r = local_es_candidate_graph({fit_of(Vector::Zero(2), eye), fit_of(Vector::Ones(2), eye)}, 0.05);
  EXPECT_EQ(r.num_candidates, 1u);
  EXPECT_DOUBLE_EQ(r.threshold, bonferroni_threshold(2, 0.05, 1));
}

TEST(Signal, DistanceAndBoundary) {
  const Matrix eye = Matrix::Identity(2, 2);
  const Vector a = Vector::Zero(2);
  Vector b(2);
  b << 3, 4;
  EXPECT_EQ(signal_distance(a, a, eye, eye, 1.0, 1.0), 0.0);
  // identity metric with c=1 on one side and a vanishing other side
  EXPECT_NEAR(signal_distance(a, b, eye, 1e-300 * eye, 1.0, 1.0), 5.0, 1e-12);
  EXPECT_NEAR(signal_distance(a, b, 0.5 * eye, 0.5 * eye, 1.0, 1.0), 5.0, 1e-12);
  // n_e * 25 vs 4 * threshold; flips at n_e = 4 * 25 / 25
  EXPECT_TRUE(minimum_signal_check(a, b, 0.5 * eye, 0.5 * eye, 1, 1, 4.0, 25.0).satisfied);
  EXPECT_FALSE(minimum_signal_check(a, b, 0.5 * eye, 0.5 * eye, 1, 1, std::nextafter(4.0, 0.0), 25.0).satisfied);
  EXPECT_THROW(signal_distance(a, b, eye, eye, 0.0, 1.0), ValidationError);
}
