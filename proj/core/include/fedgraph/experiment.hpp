#pragma once

#include "fedgraph/config.hpp"
#include "fedgraph/dataset_io.hpp"
#include "fedgraph/edge_select.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fedgraph {

/// Devices, graphs and (optional) ground truth read from a data directory.
/// Graph files index devices in sorted-file order; excluded devices are
/// dropped and the graphs restricted to the kept ones.
struct LoadedData {
  IngestResult ingest;
  DeviceGraph graph;
  std::optional<DeviceGraph> graph0;
  std::optional<Matrix> theta_star;  ///< from <dir>/theta_star.csv when present
};

LoadedData load_data_source(const DataSource& source);

/// One results-table row.
struct ResultRow {
  Method method = Method::local;
  int num_devices = 0;
  int samples = 0;   ///< smallest n_u
  int clusters = 0;  ///< K, or 0 when unknown
  int dim = 0;
  double corruption = 0.0;
  int rep = 0;
  double error = 0.0;   ///< NaN without ground truth
  double lambda = 0.0;  ///< NaN for unpenalized methods
  int cell = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

std::string results_header();
std::string format_row(const ResultRow& row);

/// A single point of the sweep grid.
struct SweepCell {
  int index = 0;
  int num_devices = 0;
  int samples = 0;
  double corruption = 0.0;
  std::optional<double> lambda;  ///< cross-validated when empty
};

std::vector<SweepCell> sweep_cells(const RunConfig& config);

/// Seed of replication `rep` in cell `cell`.
std::uint64_t replication_seed(std::uint64_t master, int cell, int rep);

/// Everything a method may look at.
struct Problem {
  const DeviceGraph* graph = nullptr;   ///< surrogate G
  const DeviceGraph* graph0 = nullptr;  ///< characteristic graph, may be null
  const FederatedData* data = nullptr;
};

struct MethodFit {
  Matrix theta;
  double lambda = 0.0;  ///< NaN for unpenalized methods
  std::optional<EdgeTestReport> selection;
};

/// Fits every requested method on one problem. Local fits and edge-selection
/// results are shared between methods. `lambda` fixes the penalty; when
/// empty it is cross-validated. `seed` keys every random stream.
std::vector<MethodFit> fit_methods(const RunConfig& config, const Problem& problem,
                                   const std::vector<Method>& methods,
                                   std::optional<double> lambda, std::uint64_t seed,
                                   int solver_threads);

/// Rows of one (cell, rep) pair: generate or load data, fit, score.
std::vector<ResultRow> run_replication(const RunConfig& config, const SweepCell& cell,
                                       int rep);

struct ExperimentSummary {
  std::vector<ResultRow> rows;
  int cells_run = 0;
  int cells_skipped = 0;
  std::string results_path;
};

/// Runs the full sweep. Per-cell CSVs under <out>/cells/ make the run
/// resumable: a cell whose file exists with a matching config hash is
/// reloaded, not recomputed. <out>/results.csv is rebuilt in (cell, rep)
/// order every time. `progress` (optional) receives one line per cell.
ExperimentSummary run_experiment(const RunConfig& config, const std::string& out_dir,
                                 const std::function<void(const std::string&)>& progress = {});

/// Held-out classification accuracy of each method over repeated random
/// 2/3 vs 1/3 splits of every device (logistic family only).
struct AccuracySummary {
  Method method = Method::local;
  double mean = 0.0;
  double sd = 0.0;
  int repeats = 0;
};

std::vector<AccuracySummary> accuracy_study(const RunConfig& config, const DeviceGraph& g,
                                            const FederatedData& data, int repeats = 50);

/// Fraction of rows whose thresholded prediction sigmoid(x^T theta_u) >= 1/2
/// matches y, pooled over devices.
double classification_accuracy(const std::vector<DeviceData>& test, const Matrix& theta);

}  // namespace fedgraph
