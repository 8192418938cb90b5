#pragma once

#include "fedgraph/models.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fedgraph {

/// Column names of a device CSV: `y,x1..xp` or `z1..zp` for the mean family.
std::vector<std::string> device_csv_header(const ModelSpec& spec);

void write_device_csv(std::ostream& out, const ModelSpec& spec,
                      const DeviceData& data);
void write_device_csv(const std::string& path, const ModelSpec& spec,
                      const DeviceData& data);

/// Reads one device file and validates it against `spec` (header names,
/// column count, logistic responses). An empty file body is an error.
DeviceData read_device_csv(std::istream& in, const ModelSpec& spec,
                           const std::string& source = "<stream>");
DeviceData read_device_csv(const std::string& path, const ModelSpec& spec);

/// Parameter matrix as CSV with header `device,theta1..thetap`; devices are
/// 1-based.
void write_theta_csv(std::ostream& out, const Matrix& theta);
void write_theta_csv(const std::string& path, const Matrix& theta);
Matrix read_theta_csv(std::istream& in);
Matrix read_theta_csv(const std::string& path);

/// Result of loading a directory of device CSVs.
struct IngestResult {
  FederatedData data;
  std::vector<std::string> device_files;  ///< loaded, in device order
  std::vector<int> kept_positions;        ///< positions in the sorted file list
  std::vector<std::string> excluded;      ///< "file,reason" rows
};

/// Loads every `*.csv` in `dir` except `theta_star.csv`, in natural filename
/// order (device_2 before device_10). Devices with fewer than `min_samples`
/// rows are excluded and listed in `excluded`.
IngestResult ingest_dataset(const std::string& dir, const ModelSpec& spec,
                            int min_samples = 1);

}  // namespace fedgraph
