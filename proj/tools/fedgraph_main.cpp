#include "fedgraph/baselines.hpp"
#include "fedgraph/config.hpp"
#include "fedgraph/experiment.hpp"
#include "fedgraph/penalty.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fedgraph;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct GlobalOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

RunConfig load_config(const GlobalOptions& g) {
  RunConfig c = g.config.empty() ? parse_config_text(R"({"synth": {}})") : parse_config(g.config);
  if (!g.out.empty()) c.output_dir = g.out;
  if (g.seed) c.seed = *g.seed;
  if (g.threads) {
    if (*g.threads < 1) throw ConfigError("threads", "must be >= 1");
    c.threads = *g.threads;
  }
  refresh_canonical(c);
  return c;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out.precision(17);
  return out;
}

void write_config_copy(const RunConfig& c, const fs::path& dir) {
  open_out(dir / "config.json") << c.canonical << '\n';
}

// A loaded or generated problem together with whatever ground truth exists.
struct Instance {
  FederatedData data;
  DeviceGraph graph;
  std::optional<DeviceGraph> graph0;
  std::optional<Matrix> truth;
};

Instance make_instance(const RunConfig& c) {
  Instance inst;
  if (c.synth) {
    SynthConfig s = *c.synth;
    s.seed = replication_seed(c.seed, 0, 0);
    SynthInstance gen = generate(s);
    inst.data = std::move(gen.data);
    inst.graph = std::move(gen.graph);
    inst.graph0 = std::move(gen.graph0);
    inst.truth = std::move(gen.theta_star);
  } else {
    LoadedData loaded = load_data_source(*c.data);
    for (const auto& row : loaded.ingest.excluded) std::cerr << "excluded: " << row << '\n';
    inst.data = std::move(loaded.ingest.data);
    inst.graph = std::move(loaded.graph);
    inst.graph0 = std::move(loaded.graph0);
    inst.truth = std::move(loaded.theta_star);
  }
  return inst;
}

double penalty_for(const RunConfig& c, const Instance& inst, const DeviceGraph& g,
                   std::optional<double> forced) {
  if (forced) return *forced;
  if (!c.sweep.lambda.empty()) return c.sweep.lambda.front();
  const double lam = cross_validate_lambda(g, inst.data, cv_options(c, c.seed)).lambda;
  std::cerr << "cross-validated lambda = " << lam << '\n';
  return lam;
}

int cmd_synth(const GlobalOptions& g) {
  const RunConfig c = load_config(g);
  if (!c.synth) throw ConfigError("synth", "the synth subcommand needs a 'synth' block");
  SynthConfig s = *c.synth;
  s.seed = replication_seed(c.seed, 0, 0);
  const SynthInstance inst = generate(s);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  write_graph_file((dir / "graph.txt").string(), inst.graph);
  write_graph_file((dir / "graph0.txt").string(), inst.graph0);
  write_theta_csv((dir / "theta_star.csv").string(), inst.theta_star);
  for (int u = 0; u < inst.data.num_devices(); ++u) {
    write_device_csv((dir / ("device_" + std::to_string(u + 1) + ".csv")).string(),
                     inst.data.spec, inst.data.devices[u]);
  }
  write_config_copy(c, dir);
  std::cout << "wrote " << inst.data.num_devices() << " devices, |E|=" << inst.graph.num_edges()
            << ", |E0|=" << inst.graph0.num_edges() << " to " << dir.string() << '\n';
  return 0;
}

struct SolveOptions {
  std::string method = "fed_admm";
  std::optional<double> lambda;
  int trace_every = 0;
};

int cmd_solve(const GlobalOptions& g, const SolveOptions& o) {
  const RunConfig c = load_config(g);
  const Method method = parse_method(o.method);
  const Instance inst = make_instance(c);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);

  Matrix theta;
  double lam = std::numeric_limits<double>::quiet_NaN();
  if (method == Method::fed_admm || method == Method::oracle) {
    const DeviceGraph* graph = &inst.graph;
    if (method == Method::oracle) {
      if (!inst.graph0) throw ConfigError("methods", "oracle needs the characteristic graph");
      graph = &*inst.graph0;
    }
    lam = penalty_for(c, inst, *graph, o.lambda);
    const SolverConfig s = effective_solver(c, inst.data, lam, c.seed);

    std::optional<std::ofstream> obj_trace;
    std::optional<std::ofstream> err_trace;
    if (o.trace_every > 0) {
      obj_trace.emplace(open_out(dir / "trace_objective.csv"));
      *obj_trace << "t,objective\n";
      if (inst.truth) {
        err_trace.emplace(open_out(dir / "trace_error.csv"));
        *err_trace << "t,device,err_sq\n";
      }
    }
    // Traces follow the averaged iterate, which is what the solver returns.
    auto hook = [&](const SolverState& st) {
      if (o.trace_every <= 0 || st.t % o.trace_every != 0) return;
      const Matrix avg = st.average();
      *obj_trace << st.t << ',' << objective(*graph, inst.data, avg, lam, s.norm) << '\n';
      if (err_trace) {
        for (Eigen::Index u = 0; u < avg.rows(); ++u) {
          *err_trace << st.t << ',' << u + 1 << ','
                     << (avg.row(u) - inst.truth->row(u)).squaredNorm() << '\n';
        }
      }
    };
    if (c.availability.enabled) {
      const auto r = run_with_availability(*graph, inst.data, s,
                                           c.availability.model(inst.data.num_devices()), hook);
      theta = r.theta_bar;
      if (!r.final_p_hat.empty()) {
        auto out = open_out(dir / "p_hat.csv");
        out << "device,p_hat\n";
        for (std::size_t u = 0; u < r.final_p_hat.size(); ++u) {
          out << u + 1 << ',' << r.final_p_hat[u] << '\n';
        }
      }
    } else {
      theta = run(*graph, inst.data, s, hook).theta_bar;
    }
    std::cout << "objective " << objective(*graph, inst.data, theta, lam, s.norm) << '\n';
  } else {
    RunConfig local = c;
    if (o.lambda) local.sweep.lambda = {*o.lambda};
    Problem problem{&inst.graph, inst.graph0 ? &*inst.graph0 : nullptr, &inst.data};
    const auto fits = fit_methods(local, problem, {method},
                                  local.sweep.lambda.empty()
                                      ? std::nullopt
                                      : std::optional<double>(local.sweep.lambda.front()),
                                  c.seed, c.threads);
    theta = fits.front().theta;
    lam = fits.front().lambda;
  }
  write_theta_csv((dir / "theta.csv").string(), theta);
  std::cout << "method " << to_string(method) << ", lambda " << lam << '\n';
  if (inst.truth) std::cout << "error " << avg_sq_error(theta, *inst.truth) << '\n';
  return 0;
}

int cmd_select_edges(const GlobalOptions& g, bool all_pairs) {
  const RunConfig c = load_config(g);
  const Instance inst = make_instance(c);
  const auto fits = local_all(inst.data).fits;
  const EdgeTestReport report = all_pairs ? local_es_candidate_graph(fits, c.alpha)
                                          : select_edges(inst.graph, fits, c.alpha);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  auto out = open_out(dir / "report.csv");
  out << "e_plus,e_minus,stat,threshold,keep\n";
  for (const auto& t : report.tests) {
    out << t.edge.plus + 1 << ',' << t.edge.minus + 1 << ',' << t.statistic << ',' << t.threshold
        << ',' << (t.keep ? 1 : 0) << '\n';
  }
  write_graph_file((dir / "selected_graph.txt").string(), report.selected);
  std::cout << "kept " << report.selected.num_edges() << " of " << report.num_candidates
            << " edges (threshold " << report.threshold << ")\n";
  if (inst.graph0) {
    const DeviceGraph truth = all_pairs ? *inst.graph0 : intersect(inst.graph, *inst.graph0);
    std::cout << "exact recovery: " << (report.selected == truth ? "yes" : "no") << '\n';
  }
  return 0;
}

int cmd_sweep(const GlobalOptions& g) {
  const RunConfig c = load_config(g);
  const auto summary = run_experiment(c, c.output_dir,
                                      [](const std::string& line) { std::cerr << line << '\n'; });
  write_config_copy(c, c.output_dir);
  std::cout << summary.rows.size() << " rows (" << summary.cells_run << " cells run, "
            << summary.cells_skipped << " reused) -> " << summary.results_path << '\n';
  return 0;
}

// Learning curves: Fed-ADMM with full and mini batches against GD and SGD,
// error of each method's returned iterate every `every` iterations, averaged
// over the configured replications.
int cmd_bench(const GlobalOptions& g, int every, std::optional<double> forced_lambda) {
  const RunConfig c = load_config(g);
  if (!c.synth) throw ConfigError("synth", "bench needs a 'synth' block (ground truth)");
  if (every < 1) throw ConfigError("every", "must be >= 1");
  const int iters = c.solver.iterations;
  const int points = iters / every;
  const char* names[] = {"fed_admm_full", "fed_admm_batch", "gd", "sgd"};
  std::vector<std::vector<double>> curve(4, std::vector<double>(static_cast<std::size_t>(points), 0.0));
  std::vector<double> seconds(4, 0.0);

  for (int rep = 0; rep < c.replications; ++rep) {
    SynthConfig s = *c.synth;
    s.seed = replication_seed(c.seed, 0, rep);
    const SynthInstance inst = generate(s);
    Instance view{inst.data, inst.graph, inst.graph0, inst.theta_star};
    const double lam = penalty_for(c, view, inst.graph, forced_lambda);
    const int batch = effective_solver(c, inst.data, lam, 0).batch_size;

    for (int m = 0; m < 4; ++m) {
      auto record = [&](int t, const Matrix& th) {
        if (t % every == 0 && t / every - 1 < points) {
          curve[m][static_cast<std::size_t>(t / every - 1)] += avg_sq_error(th, inst.theta_star);
        }
      };
      const auto start = std::chrono::steady_clock::now();
      if (m < 2) {
        SolverConfig sc = effective_solver(c, inst.data, lam, s.seed);
        sc.batch_size = m == 0 ? 0 : batch;
        run(inst.graph, inst.data, sc, [&](const SolverState& st) { record(st.t, st.average()); });
      } else {
        SubgradientConfig sg;
        sg.lambda = lam;
        sg.norm = c.solver.norm;
        sg.step = c.subgradient_step;
        sg.iterations = iters;
        sg.batch_size = m == 2 ? 0 : batch;
        sg.seed = s.seed;
        subgradient_solver(inst.graph, inst.data, sg, record);
      }
      seconds[m] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  }

  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  auto out = open_out(dir / "learning_curves.csv");
  out << "method,t,err_sq\n";
  for (int m = 0; m < 4; ++m) {
    for (int i = 0; i < points; ++i) {
      out << names[m] << ',' << (i + 1) * every << ',' << curve[m][i] / c.replications << '\n';
    }
  }
  write_config_copy(c, dir);
  for (int m = 0; m < 4; ++m) {
    std::cout << names[m] << ": final error "
              << (points > 0 ? curve[m][points - 1] / c.replications : NAN) << ", "
              << seconds[m] / c.replications << " s per run\n";
  }
  return 0;
}

int cmd_ingest(const GlobalOptions& g, int accuracy_repeats) {
  const RunConfig c = load_config(g);
  if (!c.data) throw ConfigError("data", "ingest needs a 'data' block");
  const LoadedData loaded = load_data_source(*c.data);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "devices.csv");
    out << "device,file,n\n";
    for (std::size_t u = 0; u < loaded.ingest.device_files.size(); ++u) {
      out << u + 1 << ',' << loaded.ingest.device_files[u] << ','
          << loaded.ingest.data.devices[u].size() << '\n';
    }
  }
  {
    auto out = open_out(dir / "excluded.csv");
    out << "file,reason\n";
    for (const auto& row : loaded.ingest.excluded) {
      out << row << '\n';
      std::cerr << "warning: excluded " << row << '\n';
    }
  }
  std::cout << loaded.ingest.data.num_devices() << " devices loaded, "
            << loaded.ingest.excluded.size() << " excluded, |E|=" << loaded.graph.num_edges()
            << '\n';
  if (accuracy_repeats > 0) {
    const auto acc = accuracy_study(c, loaded.graph, loaded.ingest.data, accuracy_repeats);
    auto out = open_out(dir / "accuracy.csv");
    out << "method,mean,sd,repeats\n";
    for (const auto& a : acc) {
      out << to_string(a.method) << ',' << a.mean << ',' << a.sd << ',' << a.repeats << '\n';
      std::cout << to_string(a.method) << ": " << a.mean << " (sd " << a.sd << ")\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-structured federated M-estimation: simulation, solving and sweeps"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", global.out, "output directory (overrides output_dir)");
  app.add_option("--seed", global.seed, "master seed (overrides seed)");
  app.add_option("--threads", global.threads, "worker threads (overrides threads)");

  auto* synth = app.add_subcommand("synth", "materialize a synthetic dataset directory");

  SolveOptions solve_opts;
  auto* solve = app.add_subcommand("solve", "fit one method on one instance");
  solve->add_option("--method", solve_opts.method, "method name")->capture_default_str();
  solve->add_option("--lambda", solve_opts.lambda, "penalty (default: config or cross-validation)");
  solve->add_option("--trace-every", solve_opts.trace_every,
                    "write objective/error traces every k iterations (0 = off)");

  bool all_pairs = false;
  auto* select = app.add_subcommand("select-edges", "edge selection by multiple testing");
  select->add_flag("--all-pairs", all_pairs, "test every device pair instead of the graph's edges");

  auto* sweep = app.add_subcommand("sweep", "run the configured experiment sweep");

  int every = 10;
  std::optional<double> bench_lambda;
  auto* bench = app.add_subcommand("bench", "learning curves of Fed-ADMM, GD and SGD");
  bench->add_option("--every", every, "record every k iterations")->capture_default_str();
  bench->add_option("--lambda", bench_lambda, "penalty (default: config or cross-validation)");

  int accuracy = 0;
  auto* ingest = app.add_subcommand("ingest", "load and validate a directory of device CSVs");
  ingest->add_option("--accuracy", accuracy, "repeated 2/3-1/3 splits for classification accuracy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*synth) return cmd_synth(global);
    if (*solve) return cmd_solve(global, solve_opts);
    if (*select) return cmd_select_edges(global, all_pairs);
    if (*sweep) return cmd_sweep(global);
    if (*bench) return cmd_bench(global, every, bench_lambda);
    if (*ingest) return cmd_ingest(global, accuracy);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ValidationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
