#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "swift/types.hpp"

namespace swift {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parsed from a flat `key = value` file with [section] headers; every
// validation failure names the offending section.key.
struct ExperimentConfig {
  // [experiment]
  std::string name = "run";
  std::uint64_t seed = 1;
  index_t iterations = 1000;
  index_t eval_every = 0;  // 0: once per n updates (or per round)

  // [algorithm]
  std::string algorithm = "swift";  // swift | dsgd | pasgd | ldsgd
  index_t comm_set_s = 0;
  index_t i1 = 0;
  index_t i2 = 1;
  std::string mode = "probabilistic";  // probabilistic | event
  scalar_t gamma = -1;                 // <= 0: auto from the smoothness estimate
  scalar_t gamma_scale = 1;

  // [topology]
  std::string topology_kind = "ring";  // ring | cliques | file
  index_t n = 8;                       // 0 with kind=file: take n from the file
  index_t clusters = 2;
  std::string topology_path;

  // [influence]
  std::string influence_kind = "uniform";  // uniform | explicit
  std::vector<scalar_t> influence_values;

  // [data]
  std::string task = "least_squares";  // least_squares | logistic | mlp
  index_t samples_per_client = 200;
  index_t feature_dim = 20;
  index_t classes = 10;
  scalar_t label_noise = 0.1;
  scalar_t spread = 2.0;
  std::string partition = "iid";  // iid | class_cyclic | degree
  scalar_t degree = 0;
  index_t batch_size = 1;
  index_t hidden_units = 0;
  std::string data_file;

  // [timing] (scalar entries broadcast to all n clients)
  bool has_timing = false;
  std::vector<scalar_t> compute;
  std::vector<scalar_t> comm;
  std::vector<scalar_t> slowdowns;

  // [output]
  std::string output_dir = "out";
  std::string threshold = "auto";  // auto | none | <number>
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

// Re-run the count-dependent checks; used after a file topology fixes n.
void validate_config(ExperimentConfig& c);

}  // namespace swift
