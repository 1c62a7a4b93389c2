#pragma once

#include <cstdint>
#include <vector>

#include "swift/engine.hpp"
#include "swift/learning.hpp"
#include "swift/topology.hpp"
#include "swift/types.hpp"

namespace swift {

// Symmetric doubly stochastic mixing matrix: 1/(1+max degree) on edges,
// residual mass on the diagonal.
matrix_t metropolis_weights(const Topology& topo);

// Models are columns of a (dim x n) matrix; every round takes one stochastic
// gradient per client.
matrix_t local_round(const matrix_t& x, scalar_t gamma, std::vector<GradientOracle>& oracles);
matrix_t dsgd_round(const matrix_t& x, const matrix_t& w, scalar_t gamma,
                    std::vector<GradientOracle>& oracles);

// Periodic-averaging schedule: i1 local rounds, then one mixing round.
bool pasgd_averages(index_t round, index_t i1);
matrix_t pasgd_round(const matrix_t& x, const matrix_t& w, scalar_t gamma,
                     std::vector<GradientOracle>& oracles, index_t round, index_t i1);

// Local/decentralized schedule: i1 local rounds then i2 mixing rounds, repeating.
bool ldsgd_averages(index_t round, index_t i1, index_t i2);
matrix_t ldsgd_round(const matrix_t& x, const matrix_t& w, scalar_t gamma,
                     std::vector<GradientOracle>& oracles, index_t round, index_t i1, index_t i2);

enum class SyncAlgorithm { dsgd, pasgd, ldsgd };

struct SyncRunParams {
  index_t iterations = 0;  // client updates; rounds are ceil(iterations / n)
  scalar_t gamma = 0;
  index_t i1 = 0;
  index_t i2 = 1;
  std::uint64_t seed = 0;
  index_t eval_every = 0;  // rounds between evaluations; 0 means every round
  scalar_t divergence_factor = 1e6;
};

// Round-synchronous driver sharing the record format with the asynchronous
// engine; `t` counts client updates (n per round). Pass timing to attach
// global-barrier wall-clock costs, nullptr for untimed runs.
RunResult run_synchronous(SyncAlgorithm alg, const Topology& topo, const matrix_t& w,
                          const vector_t& p, std::vector<GradientOracle>& oracles,
                          const vector_t& x0, const EventTiming* timing,
                          const SyncRunParams& params);

}  // namespace swift
