#include "fedgraph/graph.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace fedgraph {

namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  std::string s = hash == std::string::npos ? line : line.substr(0, hash);
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

DeviceGraph read_graph_text(std::istream& in) {
  std::string line;
  int num_nodes = -1;
  int line_no = 0;
  std::vector<std::pair<int, int>> pairs;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = strip_comment(line);
    if (body.empty()) continue;
    std::istringstream fields(body);
    if (num_nodes < 0) {
      if (!(fields >> num_nodes) || num_nodes < 1) {
        throw GraphError("line " + std::to_string(line_no) +
                         ": expected a positive node count");
      }
      continue;
    }
    int i = 0;
    int j = 0;
    std::string extra;
    if (!(fields >> i >> j) || (fields >> extra)) {
      throw GraphError("line " + std::to_string(line_no) +
                       ": expected two node indices");
    }
    pairs.emplace_back(i - 1, j - 1);
  }
  if (num_nodes < 0) {
    throw GraphError("graph file has no node count");
  }
  return DeviceGraph::build(num_nodes, pairs);
}

DeviceGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open graph file " + path);
  return read_graph_text(in);
}

void write_graph_text(std::ostream& out, const DeviceGraph& g) {
  out << g.num_nodes() << '\n';
  for (const auto& e : g.edges()) {
    out << e.plus + 1 << ' ' << e.minus + 1 << '\n';
  }
}

void write_graph_file(const std::string& path, const DeviceGraph& g) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write graph file " + path);
  write_graph_text(out, g);
}

DeviceGraph read_adjacency_csv(std::istream& in) {
  std::vector<std::vector<int>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::string body = strip_comment(line);
    if (body.empty()) continue;
    std::vector<int> row;
    std::istringstream cells(body);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const std::string v = strip_comment(cell);
      if (v != "0" && v != "1") {
        throw GraphError("adjacency entries must be 0 or 1, got '" + v + "'");
      }
      row.push_back(v == "1" ? 1 : 0);
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXi a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) {
      throw GraphError("adjacency matrix is not square");
    }
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rows[i][j];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a(i, i) != 0) throw SelfLoopError("adjacency diagonal must be zero");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (a(i, j) != a(j, i)) throw GraphError("adjacency matrix is not symmetric");
    }
  }
  return DeviceGraph::from_adjacency(a);
}

}  // namespace fedgraph
