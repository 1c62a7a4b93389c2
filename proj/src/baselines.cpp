#include "swift/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace swift {

namespace {

matrix_t batch_gradients(const matrix_t& x, std::vector<GradientOracle>& oracles) {
  matrix_t g(x.rows(), x.cols());
  for (index_t i = 0; i < x.cols(); ++i) {
    auto& o = oracles[static_cast<std::size_t>(i)];
    g.col(i) = o.gradient(x.col(i), o.sample_batch());
  }
  return g;
}

void validate_mixing_matrix(const Topology& topo, const matrix_t& w) {
  if (w.rows() != topo.n || w.cols() != topo.n)
    throw std::invalid_argument("run: mixing matrix must be n x n");
  for (index_t i = 0; i < topo.n; ++i) {
    if (std::abs(w.row(i).sum() - 1) > kEigenTol || std::abs(w.col(i).sum() - 1) > kEigenTol)
      throw std::invalid_argument("run: mixing matrix must be doubly stochastic");
    for (index_t j = 0; j < topo.n; ++j) {
      if (w(i, j) < 0) throw std::invalid_argument("run: mixing matrix must be non-negative");
      if (w(i, j) != 0 && i != j && !topo.is_neighbor(i, j))
        throw std::invalid_argument("run: mixing matrix weights non-edge (" + std::to_string(i) +
                                    ", " + std::to_string(j) + ")");
    }
  }
}

}  // namespace

matrix_t metropolis_weights(const Topology& topo) {
  matrix_t w = matrix_t::Zero(topo.n, topo.n);
  for (index_t i = 0; i < topo.n; ++i)
    for (index_t j : topo.adjacency[static_cast<std::size_t>(i)])
      w(i, j) = scalar_t(1) /
                static_cast<scalar_t>(1 + std::max(topo.degrees[static_cast<std::size_t>(i)],
                                                   topo.degrees[static_cast<std::size_t>(j)]));
  for (index_t i = 0; i < topo.n; ++i) w(i, i) = 1 - w.row(i).sum();
  return w;
}

matrix_t local_round(const matrix_t& x, scalar_t gamma, std::vector<GradientOracle>& oracles) {
  return x - gamma * batch_gradients(x, oracles);
}

matrix_t dsgd_round(const matrix_t& x, const matrix_t& w, scalar_t gamma,
                    std::vector<GradientOracle>& oracles) {
  return (x - gamma * batch_gradients(x, oracles)) * w;
}

bool pasgd_averages(index_t round, index_t i1) { return round % (i1 + 1) == 0; }

matrix_t pasgd_round(const matrix_t& x, const matrix_t& w, scalar_t gamma,
                     std::vector<GradientOracle>& oracles, index_t round, index_t i1) {
  return pasgd_averages(round, i1) ? dsgd_round(x, w, gamma, oracles)
                                   : local_round(x, gamma, oracles);
}

bool ldsgd_averages(index_t round, index_t i1, index_t i2) {
  return (round - 1) % (i1 + i2) >= i1;
}

matrix_t ldsgd_round(const matrix_t& x, const matrix_t& w, scalar_t gamma,
                     std::vector<GradientOracle>& oracles, index_t round, index_t i1, index_t i2) {
  return ldsgd_averages(round, i1, i2) ? dsgd_round(x, w, gamma, oracles)
                                       : local_round(x, gamma, oracles);
}

RunResult run_synchronous(SyncAlgorithm alg, const Topology& topo, const matrix_t& w,
                          const vector_t& p, std::vector<GradientOracle>& oracles,
                          const vector_t& x0, const EventTiming* timing,
                          const SyncRunParams& params) {
  const auto n = static_cast<std::size_t>(topo.n);
  validate_influence(p, topo.n);
  validate_mixing_matrix(topo, w);
  if (oracles.size() != n) throw std::invalid_argument("run: need one gradient oracle per client");
  for (const auto& o : oracles)
    if (o.dim() != x0.size())
      throw std::invalid_argument("run: start model dimension does not match the oracles");
  if (!(params.gamma > 0)) throw std::invalid_argument("run: step size must be positive");
  if (params.iterations < 0) throw std::invalid_argument("run: iterations must be >= 0");
  if (params.i1 < 0 || (alg == SyncAlgorithm::ldsgd && params.i2 < 1))
    throw std::invalid_argument("run: schedule periods must be non-negative (i2 >= 1)");
  if (timing &&
      (timing->compute.size() != n || timing->comm.size() != n || timing->slowdown.size() != n))
    throw std::invalid_argument("run: timing vectors must have one entry per client");

  for (index_t i = 0; i < topo.n; ++i)
    oracles[static_cast<std::size_t>(i)].reseed(
        Rng(params.seed, kClientStreamBase + static_cast<std::uint64_t>(i)));

  matrix_t x(x0.size(), topo.n);
  for (index_t i = 0; i < topo.n; ++i) x.col(i) = x0;

  RunResult out;
  out.updates_per_client.assign(n, 0);
  out.avg_events_per_client.assign(n, 0);
  out.comm_time_per_client.assign(n, 0);
  if (timing) out.event_times_per_client.assign(n, {});

  // Barrier costs: every client waits for the slowest compute, and averaging
  // rounds additionally wait for the slowest message in any neighborhood.
  scalar_t round_compute = 0;
  std::vector<scalar_t> neighborhood_comm(n, 0);
  scalar_t round_comm = 0;
  if (timing) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(timing->compute[i] >= 0) || !(timing->comm[i] >= 0) || !(timing->slowdown[i] > 0))
        throw std::invalid_argument("run: timing entries must be non-negative (slowdown positive)");
      round_compute = std::max(round_compute, timing->slowdown[i] * timing->compute[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (index_t j : topo.adjacency[i])
        neighborhood_comm[i] = std::max(neighborhood_comm[i], timing->comm[static_cast<std::size_t>(j)]);
      round_comm = std::max(round_comm, neighborhood_comm[i]);
    }
  }

  const index_t rounds = (params.iterations + topo.n - 1) / topo.n;
  const index_t eval_every = params.eval_every > 0 ? params.eval_every : 1;
  index_t avg_rounds = 0;
  scalar_t now = 0;
  const scalar_t f0 = global_loss(oracles, p, x0);

  auto record = [&](index_t round) {
    RunRecord r;
    r.t = round * topo.n;
    r.sim_time_s = now;
    vector_t mean = x.rowwise().mean();
    r.global_loss = global_loss(oracles, p, mean);
    scalar_t dist = 0;
    for (index_t i = 0; i < topo.n; ++i) dist += p(i) * (mean - x.col(i)).squaredNorm();
    r.consensus_dist = dist;
    r.avg_events = avg_rounds * topo.n;
    r.broadcasts = avg_rounds * topo.n;
    out.records.push_back(r);
    if (!std::isfinite(r.global_loss) ||
        r.global_loss > params.divergence_factor * std::max(f0, scalar_t(1e-12)))
      throw DivergenceError("run diverged at round " + std::to_string(round) + ": global loss " +
                            std::to_string(r.global_loss));
  };
  record(0);

  for (index_t round = 1; round <= rounds; ++round) {
    bool averages = true;
    switch (alg) {
      case SyncAlgorithm::dsgd:
        x = dsgd_round(x, w, params.gamma, oracles);
        break;
      case SyncAlgorithm::pasgd:
        averages = pasgd_averages(round, params.i1);
        x = pasgd_round(x, w, params.gamma, oracles, round, params.i1);
        break;
      case SyncAlgorithm::ldsgd:
        averages = ldsgd_averages(round, params.i1, params.i2);
        x = ldsgd_round(x, w, params.gamma, oracles, round, params.i1, params.i2);
        break;
    }
    if (averages) avg_rounds += 1;
    for (std::size_t i = 0; i < n; ++i) {
      out.updates_per_client[i] += 1;
      if (averages) out.avg_events_per_client[i] += 1;
    }
    if (timing) {
      now += round_compute + (averages ? round_comm : 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (averages) out.comm_time_per_client[i] += neighborhood_comm[i];
        out.event_times_per_client[i].push_back(now);
      }
    }
    if (round % eval_every == 0 || round == rounds) record(round);
  }

  out.broadcasts = avg_rounds * topo.n;
  out.final_time = now;
  out.states.resize(n);
  for (index_t i = 0; i < topo.n; ++i) {
    out.states[static_cast<std::size_t>(i)].model = x.col(i);
    out.states[static_cast<std::size_t>(i)].counter = rounds + 1;
  }
  return out;
}

}  // namespace swift
