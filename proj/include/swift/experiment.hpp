#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "swift/baselines.hpp"
#include "swift/config.hpp"
#include "swift/engine.hpp"
#include "swift/learning.hpp"
#include "swift/topology.hpp"
#include "swift/weights.hpp"

namespace swift {

// Everything a run needs, materialized from a validated config. The dataset
// sits behind a shared_ptr so the oracles' pointers survive moves.
struct ExperimentSetup {
  Topology topo;
  vector_t p;
  std::vector<CommunicationVector> vectors;  // swift only
  matrix_t mixing;                           // synchronous algorithms only
  std::shared_ptr<Dataset> data;
  Partition partition;
  std::vector<GradientOracle> oracles;
  scalar_t gamma = 0;
  vector_t x0;
  scalar_t f_star = std::numeric_limits<scalar_t>::quiet_NaN();
  scalar_t threshold = std::numeric_limits<scalar_t>::quiet_NaN();  // NaN: none
  EventTiming timing;
};

// May rewrite cfg.n when the topology comes from a file.
ExperimentSetup build_setup(ExperimentConfig& cfg);

struct ExperimentOutput {
  RunResult result;
  std::string trajectory_path;
  std::string summary_path;
  std::string model_path;
  std::string summary_text;
  scalar_t time_to_threshold = std::numeric_limits<scalar_t>::quiet_NaN();
  index_t iters_to_threshold = -1;
  SpectralDiagnostics diagnostics;
};

// Runs one config end to end and writes trajectory CSV, final consensus
// model, and a summary block into the output directory.
ExperimentOutput run_experiment(ExperimentConfig cfg);

struct SuiteRow {
  std::string config;
  std::string name;
  std::string algorithm;
  bool ok = false;
  std::string error;
  scalar_t final_loss = std::numeric_limits<scalar_t>::quiet_NaN();
  scalar_t sim_time_s = 0;
  index_t avg_events = 0;
  index_t broadcasts = 0;
  scalar_t time_to_threshold = std::numeric_limits<scalar_t>::quiet_NaN();
};

struct SuiteReport {
  std::vector<SuiteRow> rows;
  std::string csv_path;
  std::string text;
};

// Runs configs sequentially; a failing config becomes an error row and the
// suite keeps going.
SuiteReport run_suite(const std::vector<std::string>& config_paths);

// "ring:8", "cliques:12:3", "file:PATH" for the inspection verbs.
Topology parse_topology_spec(const std::string& spec);
// "uniform" or an explicit comma list of n positive entries summing to 1.
vector_t parse_influence_spec(const std::string& spec, index_t n);

// Output directory after the environment override, created on demand.
std::string resolve_output_dir(const std::string& configured);

}  // namespace swift
