#include "swift/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace swift {

namespace {

Topology build_topology(ExperimentConfig& cfg) {
  Topology topo;
  if (cfg.topology_kind == "ring") {
    topo = make_ring(cfg.n);
  } else if (cfg.topology_kind == "cliques") {
    topo = make_ring_of_cliques(cfg.n, cfg.clusters);
  } else {
    topo = load_edge_list(cfg.topology_path);
    if (cfg.n > 0 && cfg.n != topo.n)
      throw ConfigError("topology.n: file has " + std::to_string(topo.n) +
                        " clients, config says " + std::to_string(cfg.n));
    cfg.n = topo.n;
    validate_config(cfg);
  }
  if (!is_connected(topo)) throw ConfigError("topology: graph must be connected");
  return topo;
}

ObjectiveKind task_kind(const std::string& task) {
  if (task == "least_squares") return ObjectiveKind::least_squares;
  if (task == "logistic") return ObjectiveKind::logistic;
  return ObjectiveKind::mlp;
}

std::string join_g17(const std::vector<scalar_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += g17(v[i]);
  }
  return out;
}

std::string join_counts(const std::vector<index_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string resolve_output_dir(const std::string& configured) {
  const char* env = std::getenv("SWIFTSIM_OUTPUT_DIR");
  std::string dir = (env && *env) ? env : configured;
  if (dir.empty()) dir = ".";
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentSetup build_setup(ExperimentConfig& cfg) {
  ExperimentSetup s;
  s.topo = build_topology(cfg);
  const index_t n = s.topo.n;

  if (cfg.influence_kind == "uniform") {
    s.p = uniform_influence(n);
  } else {
    s.p.resize(n);
    for (index_t i = 0; i < n; ++i) s.p(i) = cfg.influence_values[static_cast<std::size_t>(i)];
  }
  validate_influence(s.p, n);

  if (cfg.algorithm == "swift")
    s.vectors = ccs(s.topo, s.p);
  else
    s.mixing = metropolis_weights(s.topo);

  s.data = std::make_shared<Dataset>();
  if (!cfg.data_file.empty())
    *s.data = load_csv_dataset(cfg.data_file, cfg.task != "least_squares");
  else if (cfg.task == "least_squares")
    *s.data = make_regression_dataset(n * cfg.samples_per_client, cfg.feature_dim,
                                      cfg.label_noise, cfg.seed);
  else
    *s.data = make_classification_dataset(n * cfg.samples_per_client, cfg.feature_dim,
                                          cfg.task == "logistic" ? 2 : cfg.classes, cfg.spread,
                                          cfg.seed);

  if (cfg.partition == "iid")
    s.partition = partition_iid(*s.data, n, cfg.seed);
  else if (cfg.partition == "class_cyclic")
    s.partition = partition_class_cyclic(*s.data, n);
  else
    s.partition = partition_degree(*s.data, n, cfg.degree, cfg.seed);

  const ObjectiveKind kind = task_kind(cfg.task);
  s.oracles.reserve(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i)
    s.oracles.emplace_back(kind, s.data.get(), s.partition[static_cast<std::size_t>(i)],
                           cfg.batch_size, Rng(cfg.seed, kClientStreamBase + static_cast<std::uint64_t>(i)),
                           cfg.hidden_units);

  s.gamma = cfg.gamma > 0 ? cfg.gamma : cfg.gamma_scale / (2 * lipschitz_estimate(s.oracles));

  s.x0 = vector_t::Zero(s.oracles.front().dim());

  if (kind == ObjectiveKind::least_squares) {
    s.f_star = least_squares_optimum(s.oracles, s.p).f_star;
    if (cfg.threshold == "auto") s.threshold = s.f_star + 1e-2;
  }
  if (cfg.threshold != "auto" && cfg.threshold != "none") s.threshold = std::stod(cfg.threshold);

  s.timing.compute = cfg.compute;
  s.timing.comm = cfg.comm;
  s.timing.slowdown = cfg.slowdowns;
  return s;
}

ExperimentOutput run_experiment(ExperimentConfig cfg) {
  ExperimentSetup s = build_setup(cfg);
  ExperimentOutput out;

  const bool is_swift = cfg.algorithm == "swift";
  matrix_t mbar = is_swift ? expected_matrix(s.vectors, s.p) : s.mixing;
  out.diagnostics = spectral(mbar);

  if (is_swift) {
    SwiftRunParams sp;
    sp.iterations = cfg.iterations;
    sp.gamma = s.gamma;
    sp.comm_set_s = cfg.comm_set_s;
    sp.seed = cfg.seed;
    sp.eval_every = cfg.eval_every;
    out.result = cfg.mode == "event"
                     ? run_event_driven(s.topo, s.vectors, s.p, s.oracles, s.x0, s.timing, sp)
                     : run_probabilistic(s.topo, s.vectors, s.p, s.oracles, s.x0, sp);
  } else {
    SyncRunParams yp;
    yp.iterations = cfg.iterations;
    yp.gamma = s.gamma;
    yp.i1 = cfg.i1;
    yp.i2 = cfg.i2;
    yp.seed = cfg.seed;
    yp.eval_every = cfg.eval_every;
    SyncAlgorithm alg = cfg.algorithm == "dsgd"    ? SyncAlgorithm::dsgd
                        : cfg.algorithm == "pasgd" ? SyncAlgorithm::pasgd
                                                   : SyncAlgorithm::ldsgd;
    const EventTiming* timing = (cfg.has_timing || cfg.mode == "event") ? &s.timing : nullptr;
    out.result = run_synchronous(alg, s.topo, s.mixing, s.p, s.oracles, s.x0, timing, yp);
  }

  if (!std::isnan(s.threshold)) {
    for (const auto& r : out.result.records) {
      if (r.global_loss <= s.threshold) {
        out.iters_to_threshold = r.t;
        out.time_to_threshold = r.sim_time_s;
        break;
      }
    }
  }

  const std::string dir = resolve_output_dir(cfg.output_dir);
  out.trajectory_path = dir + "/" + cfg.name + "_trajectory.csv";
  {
    std::ofstream traj(out.trajectory_path);
    if (!traj) throw ConfigError("output.dir: cannot write " + out.trajectory_path);
    if (!is_swift) traj << "algorithm,";
    traj << "t,sim_time_s,global_loss,consensus_dist,avg_events,broadcasts\n";
    for (const auto& r : out.result.records) {
      if (!is_swift) traj << cfg.algorithm << ',';
      traj << r.t << ',' << g17(r.sim_time_s) << ',' << g17(r.global_loss) << ','
           << g17(r.consensus_dist) << ',' << r.avg_events << ',' << r.broadcasts << '\n';
    }
  }

  out.model_path = dir + "/" + cfg.name + "_model.csv";
  {
    std::ofstream model(out.model_path);
    vector_t xbar = consensus_model(out.result.states);
    for (index_t i = 0; i < xbar.size(); ++i) model << g17(xbar(i)) << '\n';
  }

  const auto& last = out.result.records.back();
  std::ostringstream sum;
  sum << "experiment: " << cfg.name << '\n';
  if (is_swift)
    sum << "algorithm: swift (mode=" << cfg.mode << ", comm_set=" << cfg.comm_set_s << ")\n";
  else
    sum << "algorithm: " << cfg.algorithm << " (i1=" << cfg.i1 << ", i2=" << cfg.i2 << ")\n";
  sum << "clients: " << s.topo.n << ", edges: " << edge_count(s.topo) << '\n';
  sum << "step_size: " << g17(s.gamma) << '\n';
  sum << "iterations: " << last.t << '\n';
  sum << "final_loss: " << g17(last.global_loss) << '\n';
  sum << "final_consensus_distance: " << g17(last.consensus_dist) << '\n';
  sum << "f_star: " << (std::isnan(s.f_star) ? "n/a" : g17(s.f_star)) << '\n';
  sum << "threshold: " << (std::isnan(s.threshold) ? "none" : g17(s.threshold)) << '\n';
  if (std::isnan(s.threshold)) {
    sum << "iterations_to_threshold: n/a\ntime_to_threshold_s: n/a\n";
  } else if (out.iters_to_threshold < 0) {
    sum << "iterations_to_threshold: not reached\ntime_to_threshold_s: not reached\n";
  } else {
    sum << "iterations_to_threshold: " << out.iters_to_threshold << '\n';
    sum << "time_to_threshold_s: " << g17(out.time_to_threshold) << '\n';
  }
  sum << "sim_time_s: " << g17(out.result.final_time) << '\n';
  sum << "averaging_events_total: " << last.avg_events << '\n';
  sum << "broadcasts_total: " << last.broadcasts << '\n';
  sum << "updates_per_client: " << join_counts(out.result.updates_per_client) << '\n';
  sum << "averaging_events_per_client: " << join_counts(out.result.avg_events_per_client) << '\n';
  sum << "comm_time_per_client: " << join_g17(out.result.comm_time_per_client) << '\n';
  sum << "contraction: rho=" << g17(out.diagnostics.rho) << ", nu=" << g17(out.diagnostics.nu)
      << ", rho_nu=" << g17(out.diagnostics.rho_nu)
      << ", mixes=" << (out.diagnostics.mixes ? "yes" : "no") << '\n';
  out.summary_text = sum.str();

  out.summary_path = dir + "/" + cfg.name + "_summary.txt";
  std::ofstream(out.summary_path) << out.summary_text;
  return out;
}

SuiteReport run_suite(const std::vector<std::string>& config_paths) {
  SuiteReport rep;
  const std::string dir = resolve_output_dir("out");
  for (const auto& path : config_paths) {
    SuiteRow row;
    row.config = path;
    try {
      ExperimentConfig cfg = load_config(path);
      row.name = cfg.name;
      row.algorithm = cfg.algorithm;
      ExperimentOutput o = run_experiment(std::move(cfg));
      const auto& last = o.result.records.back();
      row.ok = true;
      row.final_loss = last.global_loss;
      row.sim_time_s = o.result.final_time;
      row.avg_events = last.avg_events;
      row.broadcasts = last.broadcasts;
      row.time_to_threshold = o.time_to_threshold;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rep.rows.push_back(std::move(row));
  }

  rep.csv_path = dir + "/suite_comparison.csv";
  {
    std::ofstream csv(rep.csv_path);
    csv << "config,name,algorithm,status,final_loss,sim_time_s,avg_events,broadcasts,"
           "time_to_threshold_s,error\n";
    for (const auto& r : rep.rows) {
      csv << csv_quote(r.config) << ',' << r.name << ',' << r.algorithm << ','
          << (r.ok ? "ok" : "error") << ',';
      if (r.ok) {
        csv << g17(r.final_loss) << ',' << g17(r.sim_time_s) << ',' << r.avg_events << ','
            << r.broadcasts << ',';
        csv << (std::isnan(r.time_to_threshold) ? "" : g17(r.time_to_threshold));
        csv << ",\n";
      } else {
        csv << ",,,,," << csv_quote(r.error) << '\n';
      }
    }
  }

  std::ostringstream text;
  text << std::left << std::setw(20) << "name" << std::setw(8) << "algo" << std::setw(16)
       << "final_loss" << std::setw(14) << "sim_time_s" << std::setw(12) << "avg_events"
       << "status\n";
  for (const auto& r : rep.rows) {
    text << std::left << std::setw(20) << (r.name.empty() ? r.config : r.name) << std::setw(8)
         << r.algorithm;
    if (r.ok) {
      std::ostringstream fl;
      fl << std::setprecision(6) << r.final_loss;
      std::ostringstream st;
      st << std::setprecision(6) << r.sim_time_s;
      text << std::setw(16) << fl.str() << std::setw(14) << st.str() << std::setw(12)
           << r.avg_events << "ok\n";
    } else {
      text << std::setw(16) << "-" << std::setw(14) << "-" << std::setw(12) << "-"
           << "error: " << r.error << '\n';
    }
  }
  rep.text = text.str();
  std::ofstream(dir + "/suite_summary.txt") << rep.text;
  return rep;
}

Topology parse_topology_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ':')) parts.push_back(cell);
  auto count_at = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(parts[i], &used);
      if (used != parts[i].size() || v < 0) throw std::invalid_argument("");
      return static_cast<index_t>(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("topology spec: '" + parts[i] + "' is not a count");
    }
  };
  if (parts.size() == 2 && parts[0] == "ring") return make_ring(count_at(1));
  if (parts.size() == 3 && parts[0] == "cliques")
    return make_ring_of_cliques(count_at(1), count_at(2));
  if (parts.size() >= 2 && parts[0] == "file")
    return load_edge_list(spec.substr(5));
  throw std::invalid_argument("topology spec must be ring:N, cliques:N:K, or file:PATH");
}

vector_t parse_influence_spec(const std::string& spec, index_t n) {
  if (spec == "uniform") return uniform_influence(n);
  std::vector<scalar_t> vals;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      scalar_t v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument("");
      vals.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("influence spec: '" + cell + "' is not a number");
    }
  }
  vector_t p(static_cast<index_t>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) p(static_cast<index_t>(i)) = vals[i];
  validate_influence(p, n);
  return p;
}

}  // namespace swift
