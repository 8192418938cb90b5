#include "fedgraph/config.hpp"

#include "fedgraph/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace fedgraph {

using json = nlohmann::json;

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kMethodNames{{
    {Method::local, "local"},
    {Method::global, "global"},
    {Method::oracle, "oracle"},
    {Method::fed_admm, "fed_admm"},
    {Method::fed_admm_es, "fed_admm_es"},
    {Method::fed_admm_local_es, "fed_admm_local_es"},
    {Method::gd, "gd"},
    {Method::sgd, "sgd"},
}};

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Typed access to one JSON object that remembers which keys were consumed.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      throw ConfigError(path(key), "integer out of range");
    }
    return static_cast<int>(x);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError(path(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

  template <class T>
  std::vector<T> list(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(path(key), "expected a list");
    if (v.empty()) throw ConfigError(path(key), "list must not be empty");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string at = path(key) + "[" + std::to_string(i) + "]";
      if constexpr (std::is_same_v<T, int>) {
        if (!v[i].is_number_integer()) throw ConfigError(at, "expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v[i].is_number()) throw ConfigError(at, "expected a number");
      } else {
        if (!v[i].is_string()) throw ConfigError(at, "expected a string");
      }
      out.push_back(v[i].get<T>());
    }
    return out;
  }

  // Parses an enum via `parse`, rethrowing its error with the key path.
  template <class F>
  auto choice(const std::string& key, F parse, decltype(parse("")) fallback) {
    if (!has(key)) return fallback;
    const std::string name = text(key, "");
    try {
      return parse(name);
    } catch (const ValidationError& e) {
      throw ConfigError(path(key), e.what());
    }
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

SynthConfig parse_synth(Section s) {
  SynthConfig c;
  c.num_devices = s.integer("num_devices", c.num_devices);
  c.num_clusters = s.integer("num_clusters", c.num_clusters);
  c.dim = s.integer("dim", c.dim);
  c.samples_per_device = s.integer("samples_per_device", c.samples_per_device);
  c.family = s.choice("family", parse_family, c.family);
  c.sigma = s.number("sigma", c.sigma);
  c.corruption = s.number("corruption", c.corruption);
  s.finish();
  require(c.num_devices >= 1, s.path("num_devices"), "must be >= 1");
  require(c.num_clusters >= 1 && c.num_clusters <= c.num_devices, s.path("num_clusters"),
          "must be in [1, num_devices]");
  require(c.dim >= 1, s.path("dim"), "must be >= 1");
  require(c.samples_per_device >= 1, s.path("samples_per_device"), "must be >= 1");
  require(c.sigma > 0.0, s.path("sigma"), "must be positive");
  require(c.corruption >= 0.0 && c.corruption <= 1.0, s.path("corruption"),
          "must be in [0, 1]");
  return c;
}

DataSource parse_data(Section s) {
  DataSource d;
  require(s.has("dir"), s.path("dir"), "required");
  d.dir = s.text("dir", "");
  d.model.family = s.choice("family", parse_family, d.model.family);
  require(s.has("dim"), s.path("dim"), "required");
  d.model.dim = s.integer("dim", 1);
  d.model.sigma = s.number("sigma", d.model.sigma);
  d.graph = s.text("graph", "");
  d.graph0 = s.text("graph0", "");
  d.min_samples = s.integer("min_samples", d.min_samples);
  s.finish();
  require(d.model.dim >= 1, s.path("dim"), "must be >= 1");
  require(d.min_samples >= 1, s.path("min_samples"), "must be >= 1");
  return d;
}

json to_json(const RunConfig& c) {
  json j;
  if (c.synth) {
    const auto& s = *c.synth;
    j["synth"] = {{"num_devices", s.num_devices},
                  {"num_clusters", s.num_clusters},
                  {"dim", s.dim},
                  {"samples_per_device", s.samples_per_device},
                  {"family", std::string(to_string(s.family))},
                  {"sigma", s.sigma},
                  {"corruption", s.corruption}};
  }
  if (c.data) {
    const auto& d = *c.data;
    j["data"] = {{"dir", d.dir},
                 {"family", std::string(to_string(d.model.family))},
                 {"dim", d.model.dim},
                 {"sigma", d.model.sigma},
                 {"graph", d.graph},
                 {"graph0", d.graph0},
                 {"min_samples", d.min_samples}};
  }
  json solver = {{"rho", c.solver.rho},
                 {"kappa", c.solver.kappa},
                 {"iterations", c.solver.iterations},
                 {"norm", std::string(to_string(c.solver.norm))},
                 {"variant", std::string(to_string(c.solver.variant))}};
  solver["batch_size"] = c.batch_size_set ? json(c.solver.batch_size) : json("auto");
  solver["projection_radius"] = std::isfinite(c.solver.projection_radius)
                                    ? json(c.solver.projection_radius)
                                    : json("inf");
  j["solver"] = solver;
  if (c.availability.enabled) {
    j["availability"] = {{"p", c.availability.p},
                         {"known", c.availability.known},
                         {"mode", std::string(to_string(c.availability.mode))}};
  }
  j["selection"] = {{"alpha", c.alpha}};
  j["cv"] = {{"folds", c.cv.folds},
             {"grid_size", c.cv.grid_size},
             {"min_ratio", c.cv.min_ratio},
             {"refine_steps", c.cv.refine_steps},
             {"per_method", c.cv.per_method}};
  j["subgradient"] = {{"step", c.subgradient_step}};
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
  j["methods"] = methods;
  j["sweep"] = {{"num_devices", c.sweep.num_devices},
                {"samples_per_device", c.sweep.samples_per_device},
                {"corruption", c.sweep.corruption},
                {"lambda", c.sweep.lambda}};
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  // output_dir and threads never change results, so they stay out of the hash.
  return j;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (const auto& [method, n] : kMethodNames) {
    if (n == name) return method;
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

AvailabilityModel AvailabilitySettings::model(int num_devices) const {
  AvailabilityModel m;
  m.known = known;
  m.mode = mode;
  if (p.size() == 1) {
    m.p.assign(static_cast<std::size_t>(num_devices), p.front());
  } else {
    m.p = p;
  }
  m.validate(num_devices);
  return m;
}

void RunConfig::validate() const {
  require(synth.has_value() != data.has_value(), "",
          "exactly one of 'synth' and 'data' must be given");
  require(replications >= 1, "replications", "must be >= 1");
  require(threads >= 1, "threads", "must be >= 1");
  require(!methods.empty(), "methods", "must not be empty");
  require(!sweep.num_devices.empty() && !sweep.samples_per_device.empty() &&
              !sweep.corruption.empty(),
          "sweep", "axes must not be empty");
  // Loaded data has no size axes; its sizes come from the files.
  if (synth) {
    for (int v : sweep.num_devices) require(v >= 1, "sweep.num_devices", "entries must be >= 1");
    for (int n : sweep.samples_per_device) {
      require(n >= 1, "sweep.samples_per_device", "entries must be >= 1");
    }
  }
  for (double r : sweep.corruption) {
    require(r >= 0.0 && r <= 1.0, "sweep.corruption", "entries must be in [0, 1]");
  }
  for (double l : sweep.lambda) require(l >= 0.0, "sweep.lambda", "entries must be >= 0");
  if (synth) {
    for (int v : sweep.num_devices) {
      require(v >= synth->num_clusters, "sweep.num_devices",
              "entries must be >= synth.num_clusters");
    }
  }
  require(alpha > 0.0 && alpha < 1.0, "selection.alpha", "must be in (0, 1)");
  require(cv.folds >= 2, "cv.folds", "must be >= 2");
  require(cv.grid_size >= 1, "cv.grid_size", "must be >= 1");
  require(cv.min_ratio > 0.0 && cv.min_ratio <= 1.0, "cv.min_ratio", "must be in (0, 1]");
  require(cv.refine_steps >= 0, "cv.refine_steps", "must be >= 0");
  require(subgradient_step > 0.0, "subgradient.step", "must be positive");
  try {
    solver.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError("solver", e.what());
  }
  if (availability.enabled) {
    require(!availability.p.empty(), "availability.p", "must not be empty");
    for (double p : availability.p) {
      require(p > 0.0 && p <= 1.0, "availability.p", "entries must be in (0, 1]");
    }
    if (availability.p.size() > 1) {
      for (int v : sweep.num_devices) {
        require(static_cast<std::size_t>(v) == availability.p.size(), "availability.p",
                "per-device list length must equal the number of devices");
      }
    }
  }
  if (data) {
    for (Method m : methods) {
      require(m != Method::oracle || !data->graph0.empty(), "methods",
              "oracle needs data.graph0 when data is loaded from files");
    }
  }
}

RunConfig parse_config_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  Section s(root, "");
  RunConfig c;
  require(!(s.has("synth") && s.has("data")), "",
          "'synth' and 'data' are mutually exclusive");
  if (s.has("synth")) c.synth = parse_synth(Section(s.raw("synth"), "synth"));
  if (s.has("data")) c.data = parse_data(Section(s.raw("data"), "data"));

  std::optional<double> fixed_lambda;
  if (s.has("solver")) {
    Section v(s.raw("solver"), "solver");
    c.solver.rho = v.number("rho", c.solver.rho);
    c.solver.kappa = v.number("kappa", c.solver.kappa);
    if (v.has("batch_size")) {
      c.solver.batch_size = v.integer("batch_size", c.solver.batch_size);
      c.batch_size_set = true;
    }
    c.solver.iterations = v.integer("iterations", c.solver.iterations);
    c.solver.norm = v.choice("norm", parse_edge_norm, c.solver.norm);
    c.solver.variant = v.choice("variant", parse_node_variant, c.solver.variant);
    if (v.has("lambda")) fixed_lambda = v.number("lambda", 0.0);
    if (v.has("projection_radius")) {
      const json& r = v.raw("projection_radius");
      if (r.is_string() && r.get<std::string>() == "inf") {
        c.solver.projection_radius = std::numeric_limits<double>::infinity();
      } else if (r.is_number()) {
        c.solver.projection_radius = r.get<double>();
      } else {
        throw ConfigError("solver.projection_radius", "expected a number or \"inf\"");
      }
    }
    v.finish();
  }
  if (s.has("availability")) {
    Section a(s.raw("availability"), "availability");
    c.availability.enabled = true;
    c.availability.mode = a.choice("mode", parse_availability_mode, c.availability.mode);
    c.availability.known = a.boolean("known", c.availability.known);
    require(a.has("p"), "availability.p", "required");
    if (a.raw("p").is_array()) {
      c.availability.p = a.list<double>("p");
    } else {
      c.availability.p = {a.number("p", 1.0)};
    }
    a.finish();
  }
  if (s.has("selection")) {
    Section a(s.raw("selection"), "selection");
    c.alpha = a.number("alpha", c.alpha);
    a.finish();
  }
  if (s.has("cv")) {
    Section a(s.raw("cv"), "cv");
    c.cv.folds = a.integer("folds", c.cv.folds);
    c.cv.grid_size = a.integer("grid_size", c.cv.grid_size);
    c.cv.min_ratio = a.number("min_ratio", c.cv.min_ratio);
    c.cv.refine_steps = a.integer("refine_steps", c.cv.refine_steps);
    c.cv.per_method = a.boolean("per_method", c.cv.per_method);
    a.finish();
  }
  if (s.has("subgradient")) {
    Section a(s.raw("subgradient"), "subgradient");
    c.subgradient_step = a.number("step", c.subgradient_step);
    a.finish();
  }
  if (s.has("methods")) {
    for (const auto& name : s.list<std::string>("methods")) {
      try {
        c.methods.push_back(parse_method(name));
      } catch (const ValidationError& e) {
        throw ConfigError("methods", e.what());
      }
    }
  } else {
    c.methods = {Method::local, Method::global, Method::fed_admm, Method::fed_admm_es};
    if (c.synth) c.methods.insert(c.methods.begin() + 2, Method::oracle);
  }

  // Sweep axes default to the single point described by the data source.
  if (c.synth) {
    c.sweep.num_devices = {c.synth->num_devices};
    c.sweep.samples_per_device = {c.synth->samples_per_device};
    c.sweep.corruption = {c.synth->corruption};
  } else {
    c.sweep.num_devices = {0};
    c.sweep.samples_per_device = {0};
    c.sweep.corruption = {0.0};
  }
  if (fixed_lambda) c.sweep.lambda = {*fixed_lambda};
  if (s.has("sweep")) {
    Section w(s.raw("sweep"), "sweep");
    if (c.data && (w.has("num_devices") || w.has("samples_per_device") || w.has("corruption"))) {
      throw ConfigError("sweep", "only 'lambda' can be swept over loaded data");
    }
    if (w.has("num_devices")) c.sweep.num_devices = w.list<int>("num_devices");
    if (w.has("samples_per_device")) {
      c.sweep.samples_per_device = w.list<int>("samples_per_device");
    }
    if (w.has("corruption")) c.sweep.corruption = w.list<double>("corruption");
    if (w.has("lambda")) c.sweep.lambda = w.list<double>("lambda");
    w.finish();
  }
  c.replications = s.integer("replications", c.replications);
  c.output_dir = s.text("output_dir", c.output_dir);
  c.seed = s.seed("seed", c.seed);
  c.threads = s.integer("threads", c.threads);
  s.finish();

  c.validate();
  refresh_canonical(c);
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void refresh_canonical(RunConfig& config) {
  config.canonical = to_json(config).dump();
  config.hash = mix64(fnv1a(config.canonical));
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

SolverConfig effective_solver(const RunConfig& config, const FederatedData& data,
                              double lambda, std::uint64_t seed) {
  SolverConfig s = config.solver;
  s.lambda = lambda;
  s.seed = seed;
  s.threads = config.threads;
  if (!config.batch_size_set) {
    Eigen::Index smallest = std::numeric_limits<Eigen::Index>::max();
    for (const auto& d : data.devices) smallest = std::min(smallest, d.size());
    s.batch_size = static_cast<int>(std::min<Eigen::Index>(10, smallest));
  }
  return s;
}

CvOptions cv_options(const RunConfig& config, std::uint64_t seed) {
  CvOptions o;
  o.folds = config.cv.folds;
  o.grid_size = config.cv.grid_size;
  o.min_ratio = config.cv.min_ratio;
  o.refine_steps = config.cv.refine_steps;
  o.norm = config.solver.norm;
  o.seed = seed;
  o.admm = config.solver;
  o.admm.seed = seed;
  o.admm.threads = config.threads;
  return o;
}

}  // namespace fedgraph
