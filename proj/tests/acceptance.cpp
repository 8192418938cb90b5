// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include "fedgraph/availability.hpp"
#include "fedgraph/baselines.hpp"
#include "fedgraph/chi2.hpp"
#include "fedgraph/config.hpp"
#include "fedgraph/cross_validation.hpp"
#include "fedgraph/edge_select.hpp"
#include "fedgraph/experiment.hpp"
#include "fedgraph/fedadmm.hpp"
#include "fedgraph/graph.hpp"
#include "fedgraph/penalty.hpp"
#include "fedgraph/synth.hpp"

#include "oracles.hpp"
#include "prox_oracle.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace fedgraph;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = budget_s <= 0 || secs <= budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s [%2d] %s: %s%s (%.1fs)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              in_time ? "" : " over time budget", secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Shared small linear instance: |V|=10, K=2, p=5, n=50.
struct SmallInstance {
  SynthInstance inst;
  double lambda = 0.0;
  Matrix reference;
};

const SmallInstance& small_instance() {
  static const SmallInstance s = [] {
    SmallInstance r;
    SynthConfig c;
    c.num_devices = 10;
    c.num_clusters = 2;
    c.dim = 5;
    c.samples_per_device = 50;
    c.corruption = 0.1;
    c.seed = 2024;
    r.inst = generate(c);
    CvOptions cv;
    cv.seed = 2024;
    r.lambda = cross_validate_lambda(r.inst.graph, r.inst.data, cv).lambda;
    r.reference = reference_minimizer(r.inst.graph, r.inst.data, r.lambda, EdgeNorm::l1).theta;
    return r;
  }();
  return s;
}

const std::vector<int> kCheckpoints = {250, 500, 1000, 2000, 4000};

// Averaged a_T at the checkpoints over `seeds` runs of `runner`.
std::vector<double> rate_curve(int seeds,
                               const std::function<void(std::uint64_t, const IterationHook&)>& runner) {
  const auto& s = small_instance();
  std::vector<double> a(kCheckpoints.size(), 0.0);
  for (int seed = 0; seed < seeds; ++seed) {
    std::size_t next = 0;
    runner(static_cast<std::uint64_t>(seed), [&](const SolverState& st) {
      if (next < kCheckpoints.size() && st.t == kCheckpoints[next]) {
        a[next++] += (st.average() - s.reference).squaredNorm() / st.theta.rows() / seeds;
      }
    });
  }
  return a;
}

Outcome slope_verdict(const std::vector<double>& a) {
  bool monotone = true;
  for (std::size_t i = 1; i < a.size(); ++i) monotone = monotone && a[i] <= a[i - 1];
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lx.push_back(std::log(kCheckpoints[i]));
    ly.push_back(std::log(a[i]));
  }
  const double slope = oracle::ols_slope(lx, ly);
  std::string d = "a_T =";
  for (double v : a) d += fmt(" %.3g", v);
  d += fmt(", slope %.3f, nonincreasing ", slope);
  d += monotone ? "yes" : "no";
  return {monotone && slope <= -0.75, d};
}

SolverConfig batch_config(double lambda, std::uint64_t seed, int iterations) {
  SolverConfig c;
  c.lambda = lambda;
  c.batch_size = 10;
  c.iterations = iterations;
  c.seed = seed;
  return c;
}

RunConfig desk_config(int devices, int clusters, int dim, int n, double corruption,
                      std::vector<Method> methods, std::uint64_t seed) {
  RunConfig c = parse_config_text("{\"synth\": {}}");
  SynthConfig s;
  s.num_devices = devices;
  s.num_clusters = clusters;
  s.dim = dim;
  s.samples_per_device = n;
  s.corruption = corruption;
  c.synth = s;
  c.sweep.num_devices = {devices};
  c.sweep.samples_per_device = {n};
  c.sweep.corruption = {corruption};
  c.methods = std::move(methods);
  c.seed = seed;
  refresh_canonical(c);
  return c;
}

// Mean error per method over `reps` replications of a single-cell config.
std::map<Method, double> mean_errors(const RunConfig& config, int reps) {
  std::map<Method, double> sum;
  const auto cell = sweep_cells(config).at(0);
  for (int rep = 0; rep < reps; ++rep) {
    for (const auto& row : run_replication(config, cell, rep)) sum[row.method] += row.error / reps;
  }
  return sum;
}

}  // namespace

int main() {
  criterion(1, "prox and edge prox vs numeric minimizers", 10, [] {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> pos(0.05, 3.0);
    std::uniform_int_distribution<int> dims(1, 6);
    double worst_prox = 0, worst_edge = 0, worst_kkt = 0, worst_obj = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const bool l1 = trial % 2 == 0;
      const EdgeNorm norm = l1 ? EdgeNorm::l1 : EdgeNorm::l2;
      const int p = dims(gen);
      const oracle::Vec v = 2.0 * oracle::random_vector(gen, p);
      const double tau = pos(gen);
      worst_prox = std::max(worst_prox,
                            (prox_phi(norm, v, tau) - oracle::numeric_prox(l1, v, tau)).norm());

      const oracle::Vec a = 2.0 * oracle::random_vector(gen, p);
      const oracle::Vec b = 2.0 * oracle::random_vector(gen, p);
      const double lambda = pos(gen), rho = pos(gen);
      const auto [b1, b2] = edge_prox(a, b, lambda, rho, norm);
      // Rotated oracle: the edge objective is a sum of an isotropic quadratic
      // in (b1 + b2)/2 and a prox problem in b1 - b2, solved numerically.
      const oracle::Vec m = 0.5 * (a + b);
      const oracle::Vec s = oracle::numeric_prox(l1, a - b, 2.0 * lambda / rho);
      worst_edge = std::max(worst_edge, (b1 - (m + 0.5 * s)).norm() + (b2 - (m - 0.5 * s)).norm());
      worst_kkt = std::max(worst_kkt, oracle::edge_kkt_residual(l1, b1, b2, a, b, lambda, rho));
      // Block coordinate descent can stall on the fused set, so it only
      // bounds the optimal value from above.
      if (trial % 10 == 0) {
        const auto [c1, c2] = oracle::numeric_edge_prox(l1, a, b, lambda, rho, 2000);
        worst_obj = std::max(worst_obj, oracle::edge_objective(l1, b1, b2, a, b, lambda, rho) -
                                            oracle::edge_objective(l1, c1, c2, a, b, lambda, rho));
      }
    }
    const bool ok = worst_prox <= 1e-8 && worst_edge <= 1e-8 && worst_kkt <= 1e-8 &&
                    worst_obj <= 1e-8;
    return Outcome{ok, fmt("max |prox err| %.2e, |edge err| %.2e, kkt %.2e, obj excess %.2e",
                           worst_prox, worst_edge, worst_kkt, worst_obj)};
  });

  criterion(2, "optimal subgraph value vs brute force, sandwich bounds", 60, [] {
    std::mt19937_64 gen(2);
    std::bernoulli_distribution coin(0.4);
    int mismatches = 0, sandwich_violations = 0, graphs = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 3 + trial % 7;
      std::vector<std::pair<int, int>> pairs;
      do {
        pairs.clear();
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j)
            if (coin(gen)) pairs.emplace_back(i, j);
      } while (pairs.size() > 12);
      const auto g = DeviceGraph::build(n, pairs);
      std::vector<int> label(n);
      std::uniform_int_distribution<int> pick(0, 2);
      for (int& l : label) l = pick(gen);
      std::vector<int> map(3, -1);
      int k = 0;
      for (int& l : label) {
        if (map[l] < 0) map[l] = k++;
        l = map[l];
      }
      const auto g0 = characteristic_graph(Clustering{label, k});
      ++graphs;
      if (optimal_subgraph_value(g, g0) != brute_force_min_partition(g, g0)) ++mismatches;

      std::vector<std::pair<int, int>> inter;
      for (auto [i, j] : pairs)
        if (label[i] == label[j]) inter.emplace_back(i, j);
      const int k_inter = oracle::bfs_components(n, inter);
      const std::uint64_t full = (std::uint64_t{1} << pairs.size()) - 1;
      std::uniform_int_distribution<std::uint64_t> mask_dist(0, full);
      for (int sub = 0; sub < 50; ++sub) {
        const std::uint64_t mask = mask_dist(gen);
        std::vector<std::pair<int, int>> kept;
        int outside = 0, missed = 0;
        for (std::size_t e = 0; e < pairs.size(); ++e) {
          const bool in0 = label[pairs[e].first] == label[pairs[e].second];
          if (mask >> e & 1) {
            kept.push_back(pairs[e]);
            outside += in0 ? 0 : 1;
          } else if (in0) {
            ++missed;
          }
        }
        const int value = oracle::bfs_components(n, kept) + outside;
        // Edge bits follow the graph's canonical (lexicographic) order, the
        // same order the pairs were generated in.
        const bool ok = k_inter <= value && value <= k_inter + outside + missed &&
                        subset_partition_value(g, g0, mask) == value;
        if (!ok) ++sandwich_violations;
      }
    }
    return Outcome{mismatches == 0 && sandwich_violations == 0,
                   fmt("%g graphs, %g value mismatches, %g sandwich violations", graphs, mismatches,
                       sandwich_violations)};
  });

  criterion(3, "full-batch objective gap at T=5000", 30, [] {
    const auto& s = small_instance();
    SolverConfig c;
    c.lambda = s.lambda;
    c.batch_size = 0;
    c.iterations = 5000;
    const auto r = run(s.inst.graph, s.inst.data, c);
    const double f_ref = objective(s.inst.graph, s.inst.data, s.reference, s.lambda, EdgeNorm::l1);
    const double f_bar = objective(s.inst.graph, s.inst.data, r.theta_bar, s.lambda, EdgeNorm::l1);
    const double gap = f_bar - f_ref;
    return Outcome{gap <= 1e-3 * std::abs(f_ref),
                   fmt("lambda %.4g, F_ref %.6f, gap %.3e (limit %.3e)", s.lambda, f_ref, gap,
                       1e-3 * std::abs(f_ref))};
  });

  criterion(4, "stochastic rate shape, batch 10, 10 seeds", 120, [] {
    const auto& s = small_instance();
    return slope_verdict(rate_curve(10, [&](std::uint64_t seed, const IterationHook& hook) {
      run(s.inst.graph, s.inst.data, batch_config(s.lambda, seed, kCheckpoints.back()), hook);
    }));
  });

  criterion(5, "proximal step equals SGD step at mapped rate", 0, [] {
    double worst = 0;
    for (int inst_id = 0; inst_id < 5; ++inst_id) {
      SynthConfig sc;
      sc.num_devices = 6 + inst_id;
      sc.num_clusters = 2;
      sc.dim = 3 + inst_id % 3;
      sc.samples_per_device = 20;
      sc.corruption = 0.3;
      sc.family = inst_id % 2 ? Family::logistic : Family::linear;
      sc.seed = 500 + inst_id;
      const auto inst = generate(sc);
      const auto& g = inst.graph;
      SolverConfig c;
      c.rho = 0.5 + 0.3 * inst_id;
      c.lambda = 0.02;
      c.kappa = 0.6 + 0.2 * inst_id;
      c.batch_size = 5;
      c.seed = inst_id;
      auto state = SolverState::zeros(g, sc.dim);
      for (int it = 0; it < 100; ++it) {
        Matrix next(state.theta.rows(), state.theta.cols());
        for (int u = 0; u < g.num_nodes(); ++u) {
          Rng r1 = node_rng(c.seed, u, state.t);
          const Vector theta = state.theta.row(u).transpose();
          const Vector grad = stochastic_gradient(inst.data.spec, inst.data.devices[u], theta,
                                                  c.batch_size, r1);
          const double eta_tilde = c.kappa / (state.t + 1);
          const double eta = eta_tilde / (1 + c.rho * g.degree(u) * eta_tilde);
          const Vector sgd =
              sgd_node_update(theta, grad, consensus_term(g, u, state, c.rho), eta, c.rho);
          Rng r2 = node_rng(c.seed, u, state.t);
          const Vector prox =
              proximal_node_step(g, u, state, inst.data.spec, inst.data.devices[u], c, r2);
          worst = std::max(worst, (sgd - prox).lpNorm<Eigen::Infinity>());
          next.row(u) = prox.transpose();
        }
        finish_iteration(g, c, g.num_nodes(), next, state);
      }
    }
    return Outcome{worst <= 1e-12, fmt("max coordinate difference %.2e over 5 instances", worst)};
  });

  criterion(6, "random availability: reduction, rate at p=0.5, IPW unbiasedness", 0, [] {
    const auto& s = small_instance();
    const auto& g = s.inst.graph;
    const auto& data = s.inst.data;
    const int n = g.num_nodes();

    const auto cfg = batch_config(s.lambda, 7, 300);
    const auto plain = run(g, data, cfg);
    const auto full = run_with_availability(g, data, cfg, AvailabilityModel::uniform(n, 1.0));
    const bool identical =
        plain.theta_bar == full.theta_bar && plain.state.theta == full.state.theta;

    const auto curve = rate_curve(10, [&](std::uint64_t seed, const IterationHook& hook) {
      run_with_availability(g, data, batch_config(s.lambda, seed, kCheckpoints.back()),
                            AvailabilityModel::uniform(n, 0.5), hook);
    });
    const auto rate = slope_verdict(curve);

    // IPW: E[R g~ / p] = full-batch gradient, coordinatewise within 3 SE.
    const int draws = 10000;
    const double p = 0.5;
    const auto model = AvailabilityModel::uniform(n, p);
    const Vector theta = Vector::Constant(data.spec.dim, 0.1);
    int outside = 0, coords = 0;
    for (int u = 0; u < 2; ++u) {
      const Vector target = risk_gradient(data.spec, data.devices[u], theta);
      Vector sum = Vector::Zero(theta.size()), sq = Vector::Zero(theta.size());
      for (int t = 0; t < draws; ++t) {
        Rng ar = availability_rng(99, t);
        const auto online = sample_availability(model, t, ar);
        Rng gr = node_rng(99, u, t);
        const Vector gt = stochastic_gradient(data.spec, data.devices[u], theta, 10, gr);
        const Vector term = online[u] ? Vector(gt / p) : Vector(Vector::Zero(theta.size()));
        sum += term;
        sq += term.cwiseProduct(term);
      }
      const Vector mean = sum / draws;
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double var = sq[i] / draws - mean[i] * mean[i];
        const double se = std::sqrt(var / draws);
        ++coords;
        if (std::abs(mean[i] - target[i]) > 3 * se) ++outside;
      }
    }
    const bool unbiased = outside == 0;
    return Outcome{identical && rate.pass && unbiased,
                   std::string("bit-identical ") + (identical ? "yes" : "no") + "; p=0.5 " +
                       rate.detail + fmt("; IPW %g/%g coordinates beyond 3 SE", outside, coords)};
  });

  criterion(7, "edge test calibration under H0", 120, [] {
    const int reps = 2000;
    int rejected = 0;
    const auto g = DeviceGraph::build(2, {{0, 1}});
    const ModelSpec spec{Family::linear, 5, 1.0};
    const Vector theta = Vector::Constant(5, 0.3);
    for (int rep = 0; rep < reps; ++rep) {
      FederatedData d{spec, {}};
      for (int u = 0; u < 2; ++u) {
        Rng rng = Rng::keyed(7000 + rep, {static_cast<std::uint64_t>(u)});
        d.devices.push_back(gen_device_data(spec, theta, 500, rng));
      }
      rejected += select_edges(g, local_all(d).fits, 0.05).selected.num_edges() == 0 ? 1 : 0;
    }
    const double freq = static_cast<double>(rejected) / reps;
    return Outcome{freq >= 0.03 && freq <= 0.08, fmt("rejection rate %.4f over %g reps", freq, reps)};
  });

  criterion(8, "exact edge recovery at 4x the signal threshold", 0, [] {
    int exact = 0, signal_ok = 0;
    const int reps = 100, n = 200, dim = 5;
    const ModelSpec spec{Family::linear, dim, 1.0};
    for (int rep = 0; rep < reps; ++rep) {
      SynthConfig c;
      c.num_devices = 12;
      c.num_clusters = 3;
      c.dim = dim;
      c.samples_per_device = n;
      c.corruption = 0.3;
      c.seed = 800 + rep;
      auto inst = generate(c);
      const auto& g = inst.graph;
      const double thr = boost::math::quantile(
          boost::math::complement(boost::math::chi_squared(dim), 0.05 / g.num_edges()));
      // Population Omega per sample is I (x ~ N(0, I), unit noise), so the
      // condition n * d^2 >= 4 thr reads n ||delta||^2 / 2 >= 4 thr. Rescale
      // the cluster parameters until the closest pair sits at that boundary.
      Rng prng = Rng::keyed(c.seed, {991});
      auto params = gen_parameters(c.num_clusters, dim, prng);
      double closest = INFINITY;
      for (std::size_t i = 0; i < params.size(); ++i)
        for (std::size_t j = i + 1; j < params.size(); ++j)
          closest = std::min(closest, (params[i] - params[j]).squaredNorm());
      const double scale = std::sqrt(8.0 * thr / (n * closest)) * (1 + 1e-9);
      for (auto& v : params) v *= scale;
      inst.theta_star = assemble_theta(inst.clusters, params);
      for (int u = 0; u < c.num_devices; ++u) {
        Rng drng = Rng::keyed(c.seed, {992, static_cast<std::uint64_t>(u)});
        inst.data.devices[u] = gen_device_data(spec, inst.theta_star.row(u).transpose(), n, drng);
      }
      bool all_ok = true;
      const Matrix eye = Matrix::Identity(dim, dim);
      for (const auto& e : g.edges()) {
        if (inst.clusters.label[e.plus] == inst.clusters.label[e.minus]) continue;
        all_ok = all_ok && minimum_signal_check(inst.theta_star.row(e.plus).transpose(),
                                                inst.theta_star.row(e.minus).transpose(), eye,
                                                eye, 1.0, 1.0, n, thr)
                               .satisfied;
      }
      signal_ok += all_ok ? 1 : 0;
      const auto r = select_edges(g, local_all(inst.data).fits, 0.05);
      exact += r.selected == intersect(g, inst.graph0) ? 1 : 0;
    }
    return Outcome{exact >= 90 && signal_ok == reps,
                   fmt("exact recovery %g/%g, signal condition met in %g/%g", exact, reps, signal_ok,
                       reps)};
  });

  criterion(9, "desk-scale method ordering and corruption crossover", 600, [] {
    const auto low = mean_errors(
        desk_config(40, 5, 20, 100, 0.1, {Method::local, Method::oracle, Method::fed_admm_es}, 9), 30);
    const auto high =
        mean_errors(desk_config(40, 5, 20, 100, 0.3, {Method::local, Method::fed_admm}, 9), 30);
    const double oracle_e = low.at(Method::oracle), es = low.at(Method::fed_admm_es),
                 local_lo = low.at(Method::local);
    const double admm_hi = high.at(Method::fed_admm), local_hi = high.at(Method::local);
    const bool order = oracle_e <= es && es <= 1.2 * oracle_e && es < local_lo;
    const bool crossover = admm_hi > local_hi;
    return Outcome{order && crossover,
                   fmt("rho=0.1: oracle %.5f, ES %.5f, local %.5f; ", oracle_e, es, local_lo) +
                       fmt("rho=0.3: Fed-ADMM %.5f vs local %.5f", admm_hi, local_hi)};
  });

  criterion(10, "oracle error ratio when doubling devices", 0, [] {
    const auto small = mean_errors(desk_config(20, 2, 20, 100, 0.1, {Method::oracle}, 10), 50);
    const auto large = mean_errors(desk_config(40, 2, 20, 100, 0.1, {Method::oracle}, 10), 50);
    const double ratio = small.at(Method::oracle) / large.at(Method::oracle);
    return Outcome{ratio >= 1.6 && ratio <= 2.5,
                   fmt("|V|=20: %.5f, |V|=40: %.5f, ratio %.3f", small.at(Method::oracle),
                       large.at(Method::oracle), ratio)};
  });

  criterion(11, "Fed-ADMM beats SGD at T=2000, batch 10", 0, [] {
    const auto& s = small_instance();
    const int seeds = 10, horizon = 2000;
    double admm = 0, sgd = 0;
    for (int seed = 0; seed < seeds; ++seed) {
      const auto r = run(s.inst.graph, s.inst.data, batch_config(s.lambda, seed, horizon));
      admm += avg_sq_error(r.theta_bar, s.reference) / seeds;
      SubgradientConfig sc;
      sc.lambda = s.lambda;
      sc.iterations = horizon;
      sc.batch_size = 10;
      sc.seed = static_cast<std::uint64_t>(seed);
      sgd += avg_sq_error(subgradient_solver(s.inst.graph, s.inst.data, sc), s.reference) / seeds;
    }
    return Outcome{admm < sgd, fmt("a_T Fed-ADMM %.3e, SGD %.3e (mean of %g seeds)", admm, sgd, seeds)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
