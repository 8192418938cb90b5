#include "fedgraph/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace fedgraph {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, const std::string& source, int line) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ValidationError(source + ":" + std::to_string(line) + ": '" + cell +
                          "' is not a number");
  }
  return v;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

// Natural ordering: compare embedded digit runs numerically.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) &&
        std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      const auto na = std::stoull(a.substr(i, ie - i));
      const auto nb = std::stoull(b.substr(j, je - j));
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

}  // namespace

std::vector<std::string> device_csv_header(const ModelSpec& spec) {
  std::vector<std::string> names;
  if (spec.family == Family::mean) {
    for (int i = 1; i <= spec.dim; ++i) names.push_back("z" + std::to_string(i));
    return names;
  }
  names.emplace_back("y");
  for (int i = 1; i <= spec.dim; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

void write_device_csv(std::ostream& out, const ModelSpec& spec,
                      const DeviceData& data) {
  const auto header = device_csv_header(spec);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << '\n' << std::setprecision(17);
  const bool has_y = spec.family != Family::mean;
  for (Eigen::Index k = 0; k < data.size(); ++k) {
    if (has_y) out << data.y(k) << ',';
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
      out << (j ? "," : "") << data.x(k, j);
    }
    out << '\n';
  }
}

void write_device_csv(const std::string& path, const ModelSpec& spec,
                      const DeviceData& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  write_device_csv(out, spec, data);
}

DeviceData read_device_csv(std::istream& in, const ModelSpec& spec,
                           const std::string& source) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line)) break;
  }
  const auto expected = device_csv_header(spec);
  if (line_no == 0 || blank(line)) {
    throw ValidationError(source + ": missing header row");
  }
  if (split_csv(line) != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw ValidationError(source + ": header does not match '" + want + "'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split_csv(line);
    if (cells.size() != expected.size()) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(expected.size()) + " columns");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, source, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(source + ": device has no samples");

  DeviceData d;
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.x.resize(n, spec.dim);
  const int offset = spec.family == Family::mean ? 0 : 1;
  if (offset) d.y.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (offset) d.y(k) = rows[k][0];
    for (int j = 0; j < spec.dim; ++j) d.x(k, j) = rows[k][j + offset];
  }
  try {
    validate(spec, d);
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return d;
}

DeviceData read_device_csv(const std::string& path, const ModelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_device_csv(in, spec, path);
}

void write_theta_csv(std::ostream& out, const Matrix& theta) {
  out << "device";
  for (Eigen::Index j = 0; j < theta.cols(); ++j) out << ",theta" << j + 1;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index u = 0; u < theta.rows(); ++u) {
    out << u + 1;
    for (Eigen::Index j = 0; j < theta.cols(); ++j) out << ',' << theta(u, j);
    out << '\n';
  }
}

void write_theta_csv(const std::string& path, const Matrix& theta) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  write_theta_csv(out, theta);
}

Matrix read_theta_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty parameter file");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "device") {
    throw ValidationError("parameter file must start with a 'device' column");
  }
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split_csv(line);
    if (static_cast<Eigen::Index>(cells.size()) != p + 1) {
      throw ValidationError("parameter file line " + std::to_string(line_no) +
                            " has the wrong column count");
    }
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      row.push_back(parse_number(cells[j], "parameter file", line_no));
    }
    rows.push_back(std::move(row));
  }
  Matrix theta(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t u = 0; u < rows.size(); ++u) {
    for (Eigen::Index j = 0; j < p; ++j) theta(static_cast<Eigen::Index>(u), j) = rows[u][j];
  }
  return theta;
}

Matrix read_theta_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_theta_csv(in);
}

IngestResult ingest_dataset(const std::string& dir, const ModelSpec& spec,
                            int min_samples) {
  spec.validate();
  if (!fs::is_directory(dir)) {
    throw ValidationError("data directory " + dir + " does not exist");
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const auto name = entry.path().filename().string();
    if (name == "theta_star.csv") continue;
    files.push_back(name);
  }
  std::sort(files.begin(), files.end(), natural_less);

  IngestResult result;
  result.data.spec = spec;
  for (std::size_t pos = 0; pos < files.size(); ++pos) {
    const auto& name = files[pos];
    DeviceData d = read_device_csv((fs::path(dir) / name).string(), spec);
    if (d.size() < min_samples) {
      result.excluded.push_back(name + ",fewer than " + std::to_string(min_samples) +
                                " samples (" + std::to_string(d.size()) + ")");
      continue;
    }
    result.device_files.push_back(name);
    result.kept_positions.push_back(static_cast<int>(pos));
    result.data.devices.push_back(std::move(d));
  }
  if (result.data.devices.empty()) {
    throw ValidationError("no usable device files in " + dir);
  }
  return result;
}

}  // namespace fedgraph
