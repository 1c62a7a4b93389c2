#include "swift/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace swift {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

scalar_t parse_number(const std::string& field, const std::string& v) {
  std::size_t used = 0;
  scalar_t x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(field + ": expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(field + ": expected a number, got '" + v + "'");
  return x;
}

index_t parse_count(const std::string& field, const std::string& v, index_t lo) {
  scalar_t x = parse_number(field, v);
  if (x != std::floor(x) || x < static_cast<scalar_t>(lo))
    throw ConfigError(field + ": expected an integer >= " + std::to_string(lo) + ", got '" + v + "'");
  return static_cast<index_t>(x);
}

std::vector<scalar_t> parse_list(const std::string& field, const std::string& v) {
  std::vector<scalar_t> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_number(field, trim(cell)));
  if (out.empty()) throw ConfigError(field + ": expected a number or comma list");
  return out;
}

void expect_one_of(const std::string& field, const std::string& v,
                   std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string msg = field + ": '" + v + "' is not one of {";
  bool first = true;
  for (const char* a : allowed) {
    if (!first) msg += ", ";
    msg += a;
    first = false;
  }
  throw ConfigError(msg + "}");
}

void broadcast_to_n(const std::string& field, std::vector<scalar_t>& v, index_t n,
                    scalar_t fill) {
  if (v.empty()) v.assign(static_cast<std::size_t>(n), fill);
  if (v.size() == 1) v.assign(static_cast<std::size_t>(n), v.front());
  if (static_cast<index_t>(v.size()) != n)
    throw ConfigError(field + ": length " + std::to_string(v.size()) + " != n = " +
                      std::to_string(n));
}

}  // namespace

void validate_config(ExperimentConfig& c) {
  expect_one_of("algorithm.name", c.algorithm, {"swift", "dsgd", "pasgd", "ldsgd"});
  expect_one_of("algorithm.mode", c.mode, {"probabilistic", "event"});
  expect_one_of("topology.kind", c.topology_kind, {"ring", "cliques", "file"});
  expect_one_of("influence.kind", c.influence_kind, {"uniform", "explicit"});
  expect_one_of("data.task", c.task, {"least_squares", "logistic", "mlp"});
  expect_one_of("data.partition", c.partition, {"iid", "class_cyclic", "degree"});

  if (c.iterations < 0) throw ConfigError("experiment.iterations: must be >= 0");
  if (c.eval_every < 0) throw ConfigError("experiment.eval_every: must be >= 0");
  if (c.comm_set_s < 0) throw ConfigError("algorithm.comm_set: must be >= 0");
  if (c.i1 < 0) throw ConfigError("algorithm.i1: must be >= 0");
  if (c.i2 < 1) throw ConfigError("algorithm.i2: must be >= 1");
  if (!(c.gamma_scale > 0)) throw ConfigError("algorithm.gamma_scale: must be positive");

  if (c.topology_kind == "file") {
    if (c.topology_path.empty()) throw ConfigError("topology.path: required when kind = file");
  } else {
    if (c.n < (c.topology_kind == "ring" ? 1 : 2))
      throw ConfigError("topology.n: must be >= 1");
    if (c.topology_kind == "cliques") {
      if (c.clusters < 2) throw ConfigError("topology.clusters: must be >= 2");
      if (c.n < 2 * c.clusters)
        throw ConfigError("topology.n: cliques need n >= 2 * clusters");
    }
  }

  if (c.influence_kind == "explicit") {
    if (c.n > 0 && static_cast<index_t>(c.influence_values.size()) != c.n)
      throw ConfigError("influence.values: length " + std::to_string(c.influence_values.size()) +
                        " != n = " + std::to_string(c.n));
    scalar_t sum = 0;
    for (scalar_t v : c.influence_values) {
      if (!(v > 0)) throw ConfigError("influence.values: entries must be positive");
      sum += v;
    }
    if (std::abs(sum - 1) > 1e-9)
      throw ConfigError("influence.values: entries must sum to 1");
  }

  if (c.task != "least_squares") {
    if (c.classes < 2) throw ConfigError("data.classes: classification needs >= 2 classes");
    if (c.task == "logistic" && c.classes != 2)
      throw ConfigError("data.classes: the logistic task needs exactly 2 classes");
  }
  if (c.partition != "iid" && c.task == "least_squares")
    throw ConfigError("data.partition: class-based partitions need a classification task");
  if (!(c.degree >= 0 && c.degree <= 1))
    throw ConfigError("data.degree: must lie in [0,1]");
  if (c.samples_per_client < 1) throw ConfigError("data.samples_per_client: must be >= 1");
  if (c.feature_dim < 1) throw ConfigError("data.feature_dim: must be >= 1");
  if (c.batch_size < 1) throw ConfigError("data.batch_size: must be >= 1");
  if (c.hidden_units < 0 || c.hidden_units > 64)
    throw ConfigError("data.hidden_units: must lie in [0,64]");
  if (c.task == "mlp" && c.gamma <= 0)
    throw ConfigError("algorithm.gamma: the mlp task has no smoothness estimate; set gamma explicitly");

  if (c.n > 0) {
    broadcast_to_n("timing.compute", c.compute, c.n, 1.0);
    broadcast_to_n("timing.comm", c.comm, c.n, 0.0);
    broadcast_to_n("timing.slowdowns", c.slowdowns, c.n, 1.0);
    for (std::size_t i = 0; i < c.slowdowns.size(); ++i) {
      if (!(c.compute[i] >= 0)) throw ConfigError("timing.compute: entries must be >= 0");
      if (!(c.comm[i] >= 0)) throw ConfigError("timing.comm: entries must be >= 0");
      if (!(c.slowdowns[i] > 0)) throw ConfigError("timing.slowdowns: entries must be positive");
    }
  }

  if (c.threshold != "auto" && c.threshold != "none") parse_number("output.threshold", c.threshold);
  if (c.name.empty()) throw ConfigError("experiment.name: must be non-empty");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::string field = section + "." + key;

    if (field == "experiment.name") c.name = value;
    else if (field == "experiment.seed") c.seed = static_cast<std::uint64_t>(parse_count(field, value, 0));
    else if (field == "experiment.iterations") c.iterations = parse_count(field, value, 0);
    else if (field == "experiment.eval_every") c.eval_every = parse_count(field, value, 0);
    else if (field == "algorithm.name") c.algorithm = value;
    else if (field == "algorithm.comm_set") c.comm_set_s = parse_count(field, value, 0);
    else if (field == "algorithm.i1") c.i1 = parse_count(field, value, 0);
    else if (field == "algorithm.i2") c.i2 = parse_count(field, value, 1);
    else if (field == "algorithm.mode") c.mode = value;
    else if (field == "algorithm.gamma") c.gamma = value == "auto" ? -1 : parse_number(field, value);
    else if (field == "algorithm.gamma_scale") c.gamma_scale = parse_number(field, value);
    else if (field == "topology.kind") c.topology_kind = value;
    else if (field == "topology.n") c.n = parse_count(field, value, 0);
    else if (field == "topology.clusters") c.clusters = parse_count(field, value, 2);
    else if (field == "topology.path") c.topology_path = value;
    else if (field == "influence.kind") c.influence_kind = value;
    else if (field == "influence.values") c.influence_values = parse_list(field, value);
    else if (field == "data.task") c.task = value;
    else if (field == "data.samples_per_client") c.samples_per_client = parse_count(field, value, 1);
    else if (field == "data.feature_dim") c.feature_dim = parse_count(field, value, 1);
    else if (field == "data.classes") c.classes = parse_count(field, value, 2);
    else if (field == "data.label_noise") c.label_noise = parse_number(field, value);
    else if (field == "data.spread") c.spread = parse_number(field, value);
    else if (field == "data.partition") c.partition = value;
    else if (field == "data.degree") c.degree = parse_number(field, value);
    else if (field == "data.batch_size") c.batch_size = parse_count(field, value, 1);
    else if (field == "data.hidden_units") c.hidden_units = parse_count(field, value, 0);
    else if (field == "data.file") c.data_file = value;
    else if (field == "timing.compute") { c.compute = parse_list(field, value); c.has_timing = true; }
    else if (field == "timing.comm") { c.comm = parse_list(field, value); c.has_timing = true; }
    else if (field == "timing.slowdowns") { c.slowdowns = parse_list(field, value); c.has_timing = true; }
    else if (field == "output.dir") c.output_dir = value;
    else if (field == "output.threshold") c.threshold = value;
    else
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown field '" + field + "'");
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace swift
