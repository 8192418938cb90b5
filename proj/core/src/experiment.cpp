#include "fedgraph/experiment.hpp"

#include "fedgraph/baselines.hpp"
#include "fedgraph/errors.hpp"
#include "fedgraph/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fedgraph {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSolverStream = 0x736f6c76ULL;
constexpr std::uint64_t kCvStream = 0x63766376ULL;
constexpr std::uint64_t kSplitStream = 0x73706c74ULL;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

bool penalized(Method m) {
  return m != Method::local && m != Method::global;
}

int smallest_sample(const FederatedData& data) {
  Eigen::Index n = std::numeric_limits<Eigen::Index>::max();
  for (const auto& d : data.devices) n = std::min(n, d.size());
  return data.devices.empty() ? 0 : static_cast<int>(n);
}

// Adds context to any library error raised while running one replication.
template <class F>
auto with_context(const std::string& where, F&& body) {
  try {
    return body();
  } catch (const ConfigError&) {
    throw;
  } catch (const NumericError& e) {
    throw NumericError(where + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

// Reads one cell file back. Returns nullopt if it is missing, truncated or
// from a different configuration.
std::optional<std::vector<ResultRow>> read_cell_file(const fs::path& path,
                                                     std::uint64_t config_hash,
                                                     std::size_t expected_rows) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != results_header()) return std::nullopt;
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_line(line);
    if (c.size() != 12) return std::nullopt;
    try {
      ResultRow r;
      r.method = parse_method(c[0]);
      r.num_devices = std::stoi(c[1]);
      r.samples = std::stoi(c[2]);
      r.clusters = std::stoi(c[3]);
      r.dim = std::stoi(c[4]);
      r.corruption = std::stod(c[5]);
      r.rep = std::stoi(c[6]);
      r.error = c[7] == "nan" ? kNaN : std::stod(c[7]);
      r.lambda = c[8] == "nan" ? kNaN : std::stod(c[8]);
      r.cell = std::stoi(c[9]);
      r.seed = std::stoull(c[10]);
      r.config_hash = std::stoull(c[11], nullptr, 16);
      if (r.config_hash != config_hash) return std::nullopt;
      rows.push_back(r);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (rows.size() != expected_rows) return std::nullopt;
  return rows;
}

void write_rows(const fs::path& path, const std::vector<ResultRow>& rows) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out << results_header() << '\n';
    for (const auto& r : rows) out << format_row(r) << '\n';
    if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string results_header() {
  return "method,|V|,n,K,p,rho_corrupt,rep,error,lambda,cell,seed,config_hash";
}

std::string format_row(const ResultRow& r) {
  std::ostringstream out;
  out << to_string(r.method) << ',' << r.num_devices << ',' << r.samples << ','
      << r.clusters << ',' << r.dim << ',' << format_double(r.corruption) << ',' << r.rep
      << ',' << format_double(r.error) << ',' << format_double(r.lambda) << ',' << r.cell
      << ',' << r.seed << ',' << hash_hex(r.config_hash);
  return out.str();
}

LoadedData load_data_source(const DataSource& source) {
  LoadedData out;
  out.ingest = ingest_dataset(source.dir, source.model, source.min_samples);
  const int total = static_cast<int>(out.ingest.kept_positions.size() + out.ingest.excluded.size());
  const auto& kept = out.ingest.kept_positions;

  auto load_graph = [&](const std::string& path) {
    DeviceGraph g = read_graph_file(path);
    if (g.num_nodes() != total) {
      throw ValidationError("graph '" + path + "' has " + std::to_string(g.num_nodes()) +
                            " nodes but the data directory has " + std::to_string(total) +
                            " device files");
    }
    return induced_subgraph(g, kept);
  };

  std::string graph_path = source.graph;
  if (graph_path.empty() && fs::exists(fs::path(source.dir) / "graph.txt")) {
    graph_path = (fs::path(source.dir) / "graph.txt").string();
  }
  out.graph = graph_path.empty() ? DeviceGraph::empty(static_cast<int>(kept.size()))
                                 : load_graph(graph_path);
  if (!source.graph0.empty()) out.graph0 = load_graph(source.graph0);

  const fs::path truth = fs::path(source.dir) / "theta_star.csv";
  if (fs::exists(truth)) {
    const Matrix all = read_theta_csv(truth.string());
    if (all.rows() != total || all.cols() != source.model.dim) {
      throw ValidationError("theta_star.csv shape does not match the device files");
    }
    Matrix t(static_cast<Eigen::Index>(kept.size()), all.cols());
    for (std::size_t i = 0; i < kept.size(); ++i) t.row(static_cast<Eigen::Index>(i)) = all.row(kept[i]);
    out.theta_star = std::move(t);
  }
  return out;
}

std::vector<SweepCell> sweep_cells(const RunConfig& config) {
  std::vector<SweepCell> cells;
  std::vector<std::optional<double>> lambdas;
  if (config.sweep.lambda.empty()) {
    lambdas.emplace_back();
  } else {
    for (double l : config.sweep.lambda) lambdas.emplace_back(l);
  }
  for (int v : config.sweep.num_devices) {
    for (int n : config.sweep.samples_per_device) {
      for (double r : config.sweep.corruption) {
        for (const auto& l : lambdas) {
          SweepCell c;
          c.index = static_cast<int>(cells.size());
          c.num_devices = v;
          c.samples = n;
          c.corruption = r;
          c.lambda = l;
          cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

std::uint64_t replication_seed(std::uint64_t master, int cell, int rep) {
  return stream_key(master, {static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(rep)});
}

std::vector<MethodFit> fit_methods(const RunConfig& config, const Problem& problem,
                                   const std::vector<Method>& methods,
                                   std::optional<double> lambda, std::uint64_t seed,
                                   int solver_threads) {
  const FederatedData& data = *problem.data;
  const DeviceGraph& g = *problem.graph;
  const std::uint64_t solver_seed = stream_key(seed, {kSolverStream});

  std::optional<LocalEstimates> local;
  auto local_fits = [&]() -> const LocalEstimates& {
    if (!local) local = local_all(data);
    return *local;
  };

  // Lambda for one graph: fixed, or cross-validated on that graph.
  std::optional<double> shared_lambda = lambda;
  auto tune = [&](const DeviceGraph& graph) {
    if (shared_lambda) return *shared_lambda;
    CvOptions o = cv_options(config, stream_key(seed, {kCvStream}));
    o.admm.threads = solver_threads;
    const double chosen = cross_validate_lambda(graph, data, o).lambda;
    if (!config.cv.per_method) shared_lambda = chosen;
    return chosen;
  };

  auto solve = [&](const DeviceGraph& graph, double lam) -> Matrix {
    SolverConfig s = effective_solver(config, data, lam, solver_seed);
    s.threads = solver_threads;
    if (config.availability.enabled) {
      return run_with_availability(graph, data, s, config.availability.model(data.num_devices()))
          .theta_bar;
    }
    return run(graph, data, s).theta_bar;
  };

  std::vector<MethodFit> fits;
  for (Method m : methods) {
    MethodFit f;
    f.lambda = kNaN;
    switch (m) {
      case Method::local:
        f.theta = local_fits().theta;
        break;
      case Method::global:
        f.theta = global_estimate(data);
        break;
      case Method::oracle: {
        if (problem.graph0 == nullptr) throw ValidationError("oracle needs the characteristic graph");
        f.lambda = tune(*problem.graph0);
        f.theta = solve(*problem.graph0, f.lambda);
        break;
      }
      case Method::fed_admm:
        f.lambda = tune(g);
        f.theta = solve(g, f.lambda);
        break;
      case Method::fed_admm_es:
      case Method::fed_admm_local_es: {
        EdgeTestReport report = m == Method::fed_admm_es
                                    ? select_edges(g, local_fits().fits, config.alpha)
                                    : local_es_candidate_graph(local_fits().fits, config.alpha);
        f.lambda = tune(report.selected);
        f.theta = solve(report.selected, f.lambda);
        f.selection = std::move(report);
        break;
      }
      case Method::gd:
      case Method::sgd: {
        SubgradientConfig s;
        f.lambda = tune(g);
        s.lambda = f.lambda;
        s.norm = config.solver.norm;
        s.step = config.subgradient_step;
        s.iterations = config.solver.iterations;
        s.seed = solver_seed;
        s.batch_size = m == Method::gd ? 0 : effective_solver(config, data, 0.0, 0).batch_size;
        f.theta = subgradient_solver(g, data, s);
        break;
      }
    }
    fits.push_back(std::move(f));
  }
  return fits;
}

std::vector<ResultRow> run_replication(const RunConfig& config, const SweepCell& cell, int rep) {
  const std::uint64_t seed = replication_seed(config.seed, cell.index, rep);
  const std::string where =
      "cell " + std::to_string(cell.index) + ", rep " + std::to_string(rep);
  return with_context(where, [&] {
    std::vector<ResultRow> rows;
    auto emit = [&](const FederatedData& data, const DeviceGraph& g, const DeviceGraph* g0,
                    const Matrix* truth, int clusters, double corruption) {
      Problem problem{&g, g0, &data};
      const auto fits = fit_methods(config, problem, config.methods, cell.lambda, seed, 1);
      for (std::size_t i = 0; i < fits.size(); ++i) {
        ResultRow r;
        r.method = config.methods[i];
        r.num_devices = data.num_devices();
        r.samples = smallest_sample(data);
        r.clusters = clusters;
        r.dim = data.spec.dim;
        r.corruption = corruption;
        r.rep = rep;
        r.error = truth ? avg_sq_error(fits[i].theta, *truth) : kNaN;
        r.lambda = penalized(r.method) ? fits[i].lambda : kNaN;
        r.cell = cell.index;
        r.seed = seed;
        r.config_hash = config.hash;
        rows.push_back(r);
      }
    };
    if (config.synth) {
      SynthConfig s = *config.synth;
      s.num_devices = cell.num_devices;
      s.samples_per_device = cell.samples;
      s.corruption = cell.corruption;
      s.seed = seed;
      const SynthInstance inst = generate(s);
      emit(inst.data, inst.graph, &inst.graph0, &inst.theta_star, s.num_clusters,
           s.corruption);
    } else {
      const LoadedData loaded = load_data_source(*config.data);
      const DeviceGraph* g0 = loaded.graph0 ? &*loaded.graph0 : nullptr;
      const Matrix* truth = loaded.theta_star ? &*loaded.theta_star : nullptr;
      const int clusters = g0 ? component_count(*g0) : 0;
      // The corruption level is a generator parameter; loaded graphs have none.
      emit(loaded.ingest.data, loaded.graph, g0, truth, clusters, kNaN);
    }
    return rows;
  });
}

ExperimentSummary run_experiment(const RunConfig& config, const std::string& out_dir,
                                 const std::function<void(const std::string&)>& progress) {
  config.validate();
  const fs::path root(out_dir);
  const fs::path cell_dir = root / "cells";
  fs::create_directories(cell_dir);

  const auto cells = sweep_cells(config);
  const std::size_t rows_per_rep = config.methods.size();
  ExperimentSummary summary;
  std::vector<std::vector<ResultRow>> cell_rows(cells.size());

  std::vector<std::pair<int, int>> tasks;  // (cell, rep) still to run
  for (const auto& cell : cells) {
    const fs::path path = cell_dir / ("cell_" + std::to_string(cell.index) + ".csv");
    const std::size_t expected = rows_per_rep * static_cast<std::size_t>(config.replications);
    if (auto rows = read_cell_file(path, config.hash, expected)) {
      cell_rows[cell.index] = std::move(*rows);
      ++summary.cells_skipped;
      if (progress) progress("cell " + std::to_string(cell.index) + " reused");
      continue;
    }
    for (int rep = 0; rep < config.replications; ++rep) tasks.emplace_back(cell.index, rep);
  }

  // Results land in per-task slots, so row order never depends on scheduling.
  std::vector<std::vector<ResultRow>> task_rows(tasks.size());
  parallel_for(tasks.size(), config.threads, [&](std::size_t i) {
    task_rows[i] = run_replication(config, cells[tasks[i].first], tasks[i].second);
  });
  for (std::size_t i = 0; i < tasks.size();) {
    const int cell = tasks[i].first;
    auto& rows = cell_rows[cell];
    for (; i < tasks.size() && tasks[i].first == cell; ++i) {
      rows.insert(rows.end(), task_rows[i].begin(), task_rows[i].end());
    }
    write_rows(cell_dir / ("cell_" + std::to_string(cell) + ".csv"), rows);
    ++summary.cells_run;
    if (progress) progress("cell " + std::to_string(cell) + " done");
  }

  for (auto& rows : cell_rows) {
    summary.rows.insert(summary.rows.end(), rows.begin(), rows.end());
  }
  summary.results_path = (root / "results.csv").string();
  write_rows(summary.results_path, summary.rows);
  return summary;
}

double classification_accuracy(const std::vector<DeviceData>& test, const Matrix& theta) {
  long long correct = 0;
  long long total = 0;
  for (std::size_t u = 0; u < test.size(); ++u) {
    const Vector score = test[u].x * theta.row(static_cast<Eigen::Index>(u)).transpose();
    for (Eigen::Index k = 0; k < score.size(); ++k) {
      const double predicted = score[k] >= 0.0 ? 1.0 : 0.0;
      correct += predicted == test[u].y[k] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? kNaN : static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<AccuracySummary> accuracy_study(const RunConfig& config, const DeviceGraph& g,
                                            const FederatedData& data, int repeats) {
  if (data.spec.family != Family::logistic) {
    throw ValidationError("accuracy mode needs the logistic family");
  }
  if (repeats < 1) throw ValidationError("accuracy repeats must be >= 1");
  std::vector<Method> methods;
  for (Method m : config.methods) {
    if (m != Method::oracle) methods.push_back(m);
  }
  const std::optional<double> lambda =
      config.sweep.lambda.empty() ? std::nullopt : std::optional<double>(config.sweep.lambda.front());

  std::vector<std::vector<double>> acc(static_cast<std::size_t>(repeats));
  parallel_for(static_cast<std::size_t>(repeats), config.threads, [&](std::size_t r) {
    const std::uint64_t seed = stream_key(config.seed, {kSplitStream, r});
    FederatedData train;
    train.spec = data.spec;
    std::vector<DeviceData> test;
    for (int u = 0; u < data.num_devices(); ++u) {
      const auto n = static_cast<std::size_t>(data.devices[u].size());
      Rng rng = Rng::keyed(seed, {static_cast<std::uint64_t>(u)});
      std::vector<int> scratch;
      std::vector<int> order;
      sample_without_replacement(rng, n, n, scratch, order);
      const std::size_t cut = (2 * n + 2) / 3;
      std::vector<int> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
      std::vector<int> te(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
      std::sort(tr.begin(), tr.end());
      std::sort(te.begin(), te.end());
      train.devices.push_back(data.devices[u].subset(tr));
      test.push_back(data.devices[u].subset(te));
    }
    Problem problem{&g, nullptr, &train};
    const auto fits = with_context("accuracy repeat " + std::to_string(r), [&] {
      return fit_methods(config, problem, methods, lambda, seed, 1);
    });
    for (const auto& f : fits) acc[r].push_back(classification_accuracy(test, f.theta));
  });

  std::vector<AccuracySummary> out;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    AccuracySummary s;
    s.method = methods[i];
    s.repeats = repeats;
    double sum = 0.0;
    for (const auto& a : acc) sum += a[i];
    s.mean = sum / repeats;
    double ss = 0.0;
    for (const auto& a : acc) ss += (a[i] - s.mean) * (a[i] - s.mean);
    s.sd = repeats > 1 ? std::sqrt(ss / (repeats - 1)) : 0.0;
    out.push_back(s);
  }
  return out;
}

}  // namespace fedgraph
