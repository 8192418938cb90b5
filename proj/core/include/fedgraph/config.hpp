#pragma once

#include "fedgraph/availability.hpp"
#include "fedgraph/cross_validation.hpp"
#include "fedgraph/fedadmm.hpp"
#include "fedgraph/synth.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedgraph {

enum class Method {
  local,
  global,
  oracle,
  fed_admm,
  fed_admm_es,
  fed_admm_local_es,
  gd,
  sgd,
};

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);

/// Devices loaded from a directory of CSVs instead of generated.
struct DataSource {
  std::string dir;
  ModelSpec model;
  std::string graph;   ///< graph file; empty means <dir>/graph.txt when present
  std::string graph0;  ///< optional characteristic graph (enables oracle)
  int min_samples = 1;
};

struct AvailabilitySettings {
  bool enabled = false;
  std::vector<double> p;  ///< one entry broadcasts to every device
  bool known = true;
  AvailabilityMode mode = AvailabilityMode::independent;

  AvailabilityModel model(int num_devices) const;
};

struct CvSettings {
  int folds = 5;
  int grid_size = 10;
  double min_ratio = 1e-4;
  int refine_steps = 8;
  /// Tune lambda separately on each method's graph, or once on the input
  /// graph and reuse it.
  bool per_method = true;
};

/// Sweep axes. `lambda` empty means cross-validate in every cell.
struct SweepAxes {
  std::vector<int> num_devices;
  std::vector<int> samples_per_device;
  std::vector<double> corruption;
  std::vector<double> lambda;
};

struct RunConfig {
  std::optional<SynthConfig> synth;
  std::optional<DataSource> data;
  SolverConfig solver;
  bool batch_size_set = false;  ///< otherwise batch = min(10, smallest n_u)
  AvailabilitySettings availability;
  double alpha = 0.05;
  CvSettings cv;
  double subgradient_step = 0.5;
  std::vector<Method> methods;
  SweepAxes sweep;
  int replications = 1;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;

  /// Normalized JSON with every default filled in; stable across runs.
  std::string canonical;
  std::uint64_t hash = 0;

  void validate() const;
};

/// Parses and validates a JSON run configuration. Unknown keys, wrong types
/// and out-of-range values throw ConfigError naming the key path.
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config(const std::string& path);

/// Recomputes `canonical` and `hash` after programmatic edits (for example
/// command-line overrides).
void refresh_canonical(RunConfig& config);

/// 16 hex digits.
std::string hash_hex(std::uint64_t hash);

/// SolverConfig for one run over `data`, resolving the batch default.
SolverConfig effective_solver(const RunConfig& config, const FederatedData& data,
                              double lambda, std::uint64_t seed);

CvOptions cv_options(const RunConfig& config, std::uint64_t seed);

}  // namespace fedgraph
