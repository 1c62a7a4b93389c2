#include "swift/engine.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <utility>

namespace swift {

namespace {

void validate_run_inputs(const Topology& topo, const std::vector<CommunicationVector>& vectors,
                         const vector_t& p, const std::vector<GradientOracle>& oracles,
                         const vector_t& x0, const SwiftRunParams& params) {
  validate_influence(p, topo.n);
  if (static_cast<index_t>(oracles.size()) != topo.n)
    throw std::invalid_argument("run: need one gradient oracle per client");
  if (static_cast<index_t>(vectors.size()) != topo.n)
    throw std::invalid_argument("run: need one communication vector per client");
  for (index_t i = 0; i < topo.n; ++i) {
    const auto& v = vectors[static_cast<std::size_t>(i)];
    if (v.owner != i || v.w.size() != topo.n)
      throw std::invalid_argument("run: communication vectors must be owner-ordered over n clients");
    if (std::abs(v.w.sum() - 1) > kEigenTol || v.w.minCoeff() < 0)
      throw std::invalid_argument("run: communication vector " + std::to_string(i) +
                                  " is not a probability vector");
    for (index_t k = 0; k < topo.n; ++k)
      if (v.w(k) != 0 && k != i && !topo.is_neighbor(i, k))
        throw std::invalid_argument("run: communication vector " + std::to_string(i) +
                                    " weights non-neighbor " + std::to_string(k));
    if (oracles[static_cast<std::size_t>(i)].dim() != x0.size())
      throw std::invalid_argument("run: start model dimension does not match oracle " +
                                  std::to_string(i));
  }
  if (!(params.gamma > 0)) throw std::invalid_argument("run: step size must be positive");
  if (params.iterations < 0) throw std::invalid_argument("run: iterations must be >= 0");
  if (params.comm_set_s < 0) throw std::invalid_argument("run: communication gap must be >= 0");
}

// Bookkeeping shared by the two schedulers.
struct RunLoop {
  const Topology& topo;
  const std::vector<CommunicationVector>& vectors;
  const vector_t& p;
  std::vector<GradientOracle>& oracles;
  const SwiftRunParams& params;
  CommunicationSet cs;
  RunResult out;
  matrix_t shadow;
  scalar_t f0 = 0;
  index_t eval_every = 0;
  index_t avg_total = 0;

  RunLoop(const Topology& topo_, const std::vector<CommunicationVector>& vectors_,
          const vector_t& p_, std::vector<GradientOracle>& oracles_, const vector_t& x0,
          const SwiftRunParams& params_)
      : topo(topo_), vectors(vectors_), p(p_), oracles(oracles_), params(params_) {
    validate_run_inputs(topo, vectors, p, oracles, x0, params);
    cs.s = params.comm_set_s;
    for (index_t i = 0; i < topo.n; ++i)
      oracles[static_cast<std::size_t>(i)].reseed(
          Rng(params.seed, kClientStreamBase + static_cast<std::uint64_t>(i)));
    out.states = init_states(topo, x0);
    out.updates_per_client.assign(static_cast<std::size_t>(topo.n), 0);
    out.avg_events_per_client.assign(static_cast<std::size_t>(topo.n), 0);
    out.comm_time_per_client.assign(static_cast<std::size_t>(topo.n), 0);
    if (params.shadow_check) {
      out.max_shadow_gap = 0;
      shadow.resize(x0.size(), topo.n);
      for (index_t i = 0; i < topo.n; ++i) shadow.col(i) = x0;
    }
    eval_every = params.eval_every > 0 ? params.eval_every : topo.n;
    f0 = global_loss(oracles, p, x0);
    record(0, 0);
  }

  StepEffect step(index_t active, index_t t) {
    StepEffect eff = swift_step(out.states, topo, vectors, cs, active, params.gamma,
                                oracles[static_cast<std::size_t>(active)], t);
    out.updates_per_client[static_cast<std::size_t>(active)] += 1;
    out.broadcasts += 1;
    if (eff.averaged) {
      avg_total += 1;
      out.avg_events_per_client[static_cast<std::size_t>(active)] += 1;
    }
    if (params.shadow_check) {
      shadow = shadow * active_matrix(vectors, active, eff.averaged);
      shadow.col(active) -= params.gamma * eff.gradient;
      scalar_t gap = 0;
      for (index_t i = 0; i < topo.n; ++i)
        gap = std::max(gap, (shadow.col(i) - out.states[static_cast<std::size_t>(i)].model)
                                .lpNorm<Eigen::Infinity>());
      out.max_shadow_gap = std::max(out.max_shadow_gap, gap);
    }
    return eff;
  }

  void record(index_t t, scalar_t sim_time) {
    RunRecord r;
    r.t = t;
    r.sim_time_s = sim_time;
    r.global_loss = global_loss(oracles, p, consensus_model(out.states));
    r.consensus_dist = consensus_distance(out.states, p);
    r.avg_events = avg_total;
    r.broadcasts = out.broadcasts;
    out.records.push_back(r);
    if (!std::isfinite(r.global_loss) ||
        r.global_loss > params.divergence_factor * std::max(f0, scalar_t(1e-12)))
      throw DivergenceError("run diverged at iteration " + std::to_string(t) +
                            ": global loss " + std::to_string(r.global_loss));
  }

  bool eval_due(index_t t) const { return t % eval_every == 0 || t == params.iterations; }
};

}  // namespace

std::vector<ClientState> init_states(const Topology& topo, const vector_t& x0) {
  std::vector<ClientState> states(static_cast<std::size_t>(topo.n));
  for (index_t i = 0; i < topo.n; ++i) {
    auto& st = states[static_cast<std::size_t>(i)];
    st.model = x0;
    st.counter = 1;
    st.mailbox.resize(static_cast<std::size_t>(topo.n));
    for (index_t j : topo.adjacency[static_cast<std::size_t>(i)])
      st.mailbox[static_cast<std::size_t>(j)].model = x0;
  }
  return states;
}

index_t sample_active(const vector_t& p, Rng& rng) {
  scalar_t u = rng.uniform01();
  scalar_t acc = 0;
  for (index_t i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u < acc) return i;
  }
  return p.size() - 1;
}

StepEffect swift_step(std::vector<ClientState>& states, const Topology& topo,
                      const std::vector<CommunicationVector>& vectors,
                      const CommunicationSet& cs, index_t active, scalar_t gamma,
                      GradientOracle& oracle, index_t t) {
  ClientState& st = states[static_cast<std::size_t>(active)];
  StepEffect eff;
  eff.gradient = oracle.gradient(st.model, oracle.sample_batch());
  eff.averaged = cs.contains(st.counter);
  if (eff.averaged) {
    const vector_t& w = vectors[static_cast<std::size_t>(active)].w;
    vector_t mixed = w(active) * st.model;
    for (index_t k : topo.adjacency[static_cast<std::size_t>(active)])
      if (w(k) != 0) mixed += w(k) * st.mailbox[static_cast<std::size_t>(k)].model;
    st.model = std::move(mixed);
  }
  st.model -= gamma * eff.gradient;
  for (index_t k : topo.adjacency[static_cast<std::size_t>(active)]) {
    auto& slot = states[static_cast<std::size_t>(k)].mailbox[static_cast<std::size_t>(active)];
    slot.model = st.model;
    slot.stamp = t;
  }
  st.counter += 1;
  return eff;
}

vector_t consensus_model(const std::vector<ClientState>& states) {
  vector_t mean = vector_t::Zero(states.front().model.size());
  for (const auto& st : states) mean += st.model;
  return mean / static_cast<scalar_t>(states.size());
}

scalar_t consensus_distance(const std::vector<ClientState>& states, const vector_t& p) {
  vector_t mean = consensus_model(states);
  scalar_t d = 0;
  for (std::size_t i = 0; i < states.size(); ++i)
    d += p(static_cast<index_t>(i)) * (mean - states[i].model).squaredNorm();
  return d;
}

RunResult run_probabilistic(const Topology& topo, const std::vector<CommunicationVector>& vectors,
                            const vector_t& p, std::vector<GradientOracle>& oracles,
                            const vector_t& x0, const SwiftRunParams& params) {
  RunLoop loop(topo, vectors, p, oracles, x0, params);
  Rng sampler(params.seed, kSamplerStream);
  for (index_t t = 1; t <= params.iterations; ++t) {
    index_t active = sample_active(p, sampler);
    loop.step(active, t);
    if (loop.eval_due(t)) loop.record(t, 0);
  }
  loop.out.final_time = 0;
  return std::move(loop.out);
}

RunResult run_event_driven(const Topology& topo, const std::vector<CommunicationVector>& vectors,
                           const vector_t& p, std::vector<GradientOracle>& oracles,
                           const vector_t& x0, const EventTiming& timing,
                           const SwiftRunParams& params) {
  const auto n = static_cast<std::size_t>(topo.n);
  if (timing.compute.size() != n || timing.comm.size() != n || timing.slowdown.size() != n)
    throw std::invalid_argument("run: timing vectors must have one entry per client");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(timing.compute[i] >= 0) || !(timing.comm[i] >= 0) || !(timing.slowdown[i] > 0))
      throw std::invalid_argument("run: timing entries must be non-negative (slowdown positive)");
  }

  RunLoop loop(topo, vectors, p, oracles, x0, params);
  loop.out.event_times_per_client.assign(n, {});

  using Event = std::pair<scalar_t, index_t>;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> heap;
  auto schedule = [&](index_t i, scalar_t now) {
    const auto ui = static_cast<std::size_t>(i);
    scalar_t dur = timing.slowdown[ui] * timing.compute[ui];
    if (loop.cs.contains(loop.out.states[ui].counter)) dur += timing.comm[ui];
    heap.emplace(now + dur, i);
  };
  for (index_t i = 0; i < topo.n; ++i) schedule(i, 0);

  scalar_t now = 0;
  for (index_t t = 1; t <= params.iterations; ++t) {
    auto [tm, active] = heap.top();
    heap.pop();
    now = tm;
    StepEffect eff = loop.step(active, t);
    const auto ua = static_cast<std::size_t>(active);
    loop.out.event_times_per_client[ua].push_back(tm);
    if (eff.averaged) loop.out.comm_time_per_client[ua] += timing.comm[ua];
    schedule(active, now);
    if (loop.eval_due(t)) loop.record(t, now);
  }
  loop.out.final_time = now;
  return std::move(loop.out);
}

}  // namespace swift
