#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "swift/learning.hpp"
#include "swift/topology.hpp"
#include "swift/types.hpp"
#include "swift/weights.hpp"

namespace swift {

// Stream ids carved out of the master seed; exposed so reference
// implementations in tests can reproduce the exact draw sequence.
inline constexpr std::uint64_t kClientStreamBase = 0xC11E47;
inline constexpr std::uint64_t kSamplerStream = 0x5A3B1E;

// Set of local-update counts at which a client averages its neighborhood.
// s == 0 means every update, s == 1 every second update, and so on.
struct CommunicationSet {
  index_t s = 0;
  bool contains(index_t counter) const { return counter % (s + 1) == 0; }
};

struct MailSlot {
  vector_t model;
  index_t stamp = -1;  // iteration of the deposit, -1 for the shared start model
};

struct ClientState {
  vector_t model;
  index_t counter = 1;
  std::vector<MailSlot> mailbox;  // indexed by sender id; only neighbor entries used
};

std::vector<ClientState> init_states(const Topology& topo, const vector_t& x0);

// Inverse-CDF draw over the influence weights; consumes one uniform.
index_t sample_active(const vector_t& p, Rng& rng);

struct StepEffect {
  bool averaged = false;
  vector_t gradient;
};

// One asynchronous update by `active`: gradient at the pre-averaging model,
// neighborhood average when the counter hits the communication set, descent
// step, then broadcast of the new model into neighbor mailboxes.
StepEffect swift_step(std::vector<ClientState>& states, const Topology& topo,
                      const std::vector<CommunicationVector>& vectors,
                      const CommunicationSet& cs, index_t active, scalar_t gamma,
                      GradientOracle& oracle, index_t t);

vector_t consensus_model(const std::vector<ClientState>& states);
scalar_t consensus_distance(const std::vector<ClientState>& states, const vector_t& p);

struct RunRecord {
  index_t t = 0;
  scalar_t sim_time_s = 0;
  scalar_t global_loss = 0;
  scalar_t consensus_dist = 0;
  index_t avg_events = 0;
  index_t broadcasts = 0;
};

struct RunResult {
  std::vector<RunRecord> records;
  std::vector<ClientState> states;
  std::vector<index_t> updates_per_client;
  std::vector<index_t> avg_events_per_client;
  std::vector<scalar_t> comm_time_per_client;
  std::vector<std::vector<scalar_t>> event_times_per_client;  // event mode only
  index_t broadcasts = 0;
  scalar_t final_time = 0;
  scalar_t max_shadow_gap = -1;  // only tracked when shadow_check is on
};

struct SwiftRunParams {
  index_t iterations = 0;
  scalar_t gamma = 0;
  index_t comm_set_s = 0;
  std::uint64_t seed = 0;
  index_t eval_every = 0;  // 0 means once per n updates
  bool shadow_check = false;
  scalar_t divergence_factor = 1e6;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Global-iteration model: each step activates one client drawn from p.
// Simulated time stays zero.
RunResult run_probabilistic(const Topology& topo, const std::vector<CommunicationVector>& vectors,
                            const vector_t& p, std::vector<GradientOracle>& oracles,
                            const vector_t& x0, const SwiftRunParams& params);

// Per-update wall-clock costs for the event-driven mode. Broadcasts are free;
// the comm term is paid only on updates that average the neighborhood.
struct EventTiming {
  std::vector<scalar_t> compute;
  std::vector<scalar_t> comm;
  std::vector<scalar_t> slowdown;
};

// Completion-order model: clients run concurrently and the next update to
// finish is applied next. Influence weights are implied by update rates.
RunResult run_event_driven(const Topology& topo, const std::vector<CommunicationVector>& vectors,
                           const vector_t& p, std::vector<GradientOracle>& oracles,
                           const vector_t& x0, const EventTiming& timing,
                           const SwiftRunParams& params);

}  // namespace swift
