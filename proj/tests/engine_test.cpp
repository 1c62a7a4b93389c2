#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "swift/engine.hpp"
#include "test_util.hpp"

using namespace swift;

namespace {

struct Bench {
  Topology topo;
  vector_t p;
  std::vector<CommunicationVector> vectors;
  Dataset data;
  std::vector<GradientOracle> oracles;
  vector_t x0;
};

// Ring of n clients over an iid least-squares split.
Bench make_bench(index_t n, index_t dim, index_t per_client, std::uint64_t seed,
                 index_t batch = 2) {
  Bench b{make_ring(n), uniform_influence(n), {}, {}, {}, {}};
  b.vectors = ccs(b.topo, b.p);
  b.data = make_regression_dataset(n * per_client, dim, 0.2, seed);
  Partition part = partition_iid(b.data, n, seed + 1);
  for (index_t i = 0; i < n; ++i)
    b.oracles.emplace_back(ObjectiveKind::least_squares, &b.data,
                           part[static_cast<std::size_t>(i)], batch,
                           Rng(seed, kClientStreamBase + static_cast<std::uint64_t>(i)));
  b.x0 = vector_t::Zero(dim);
  return b;
}

}  // namespace

TEST_CASE("communication set membership follows the update counter") {
  CommunicationSet every{0};
  CHECK(every.contains(1));
  CHECK(every.contains(2));
  CommunicationSet odd_gap{1};
  CHECK_FALSE(odd_gap.contains(1));
  CHECK(odd_gap.contains(2));
  CHECK_FALSE(odd_gap.contains(3));
  CHECK(odd_gap.contains(4));
  CommunicationSet sparse{3};
  CHECK_FALSE(sparse.contains(3));
  CHECK(sparse.contains(4));
  CHECK(sparse.contains(8));
}

TEST_CASE("initial states share the start model with stamped-out mailboxes") {
  Topology t = make_ring(4);
  vector_t x0 = swift_test::vec({1.0, -2.0});
  auto states = init_states(t, x0);
  REQUIRE(states.size() == 4);
  for (index_t i = 0; i < 4; ++i) {
    const auto& st = states[static_cast<std::size_t>(i)];
    CHECK(st.model == x0);
    CHECK(st.counter == 1);
    REQUIRE(st.mailbox.size() == 4);
    for (index_t j : t.adjacency[static_cast<std::size_t>(i)]) {
      CHECK(st.mailbox[static_cast<std::size_t>(j)].model == x0);
      CHECK(st.mailbox[static_cast<std::size_t>(j)].stamp == -1);
    }
  }
}

TEST_CASE("active-client sampling inverts the influence cdf") {
  Rng rng(5, 5);
  vector_t point = swift_test::vec({0.0, 0.0, 1.0, 0.0});
  for (int k = 0; k < 50; ++k) CHECK(sample_active(point, rng) == 2);

  vector_t p = swift_test::vec({0.1, 0.2, 0.3, 0.4});
  std::vector<int> counts(4, 0);
  for (int k = 0; k < 40000; ++k) counts[static_cast<std::size_t>(sample_active(p, rng))] += 1;
  for (index_t i = 0; i < 4; ++i) {
    scalar_t freq = counts[static_cast<std::size_t>(i)] / 40000.0;
    CHECK(std::abs(freq - p(i)) < 0.015);
  }

  Rng a(9, 1), b(9, 1);
  for (int k = 0; k < 100; ++k) CHECK(sample_active(p, a) == sample_active(p, b));
}

TEST_CASE("one step averages the mailbox neighborhood before descending") {
  Topology t = make_ring(2);
  vector_t p = uniform_influence(2);
  auto vectors = ccs(t, p);  // both clients weigh self and peer by 1/2
  Dataset ds;
  ds.features.resize(1, 1);
  ds.features << 1.0;
  ds.labels.resize(1);
  ds.labels << 0.0;
  GradientOracle oracle(ObjectiveKind::least_squares, &ds, {0}, 1, Rng(1, 0));

  auto states = init_states(t, swift_test::vec({1.0}));
  states[0].model = swift_test::vec({1.0});
  states[1].model = swift_test::vec({5.0});
  states[0].mailbox[1].model = swift_test::vec({3.0});

  SUBCASE("averaging step mixes, descends at the pre-mix gradient, broadcasts") {
    // gradient at x = 1 is (a.x - b) a = 1; mix = (1 + 3)/2 = 2.
    StepEffect eff = swift_step(states, t, vectors, CommunicationSet{0}, 0, 0.1, oracle, 7);
    CHECK(eff.averaged);
    CHECK(eff.gradient(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(states[0].model(0) == doctest::Approx(1.9).epsilon(1e-15));
    CHECK(states[0].counter == 2);
    CHECK(states[1].mailbox[0].model(0) == doctest::Approx(1.9).epsilon(1e-15));
    CHECK(states[1].mailbox[0].stamp == 7);
    CHECK(states[1].model(0) == 5.0);  // peer untouched until its own update
  }

  SUBCASE("non-averaging step leaves the mailbox out of the model") {
    StepEffect eff = swift_step(states, t, vectors, CommunicationSet{1}, 0, 0.1, oracle, 7);
    CHECK_FALSE(eff.averaged);
    CHECK(states[0].model(0) == doctest::Approx(0.9).epsilon(1e-15));
    // The broadcast still happens on every update.
    CHECK(states[1].mailbox[0].model(0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(states[1].mailbox[0].stamp == 7);
  }
}

TEST_CASE("a single client reproduces sequential sgd bit for bit") {
  const std::uint64_t seed = 404;
  Topology t = make_topology(1, {});
  vector_t p = uniform_influence(1);
  auto vectors = ccs(t, p);
  Dataset ds = make_regression_dataset(50, 4, 0.3, seed);
  std::vector<index_t> shard(50);
  std::iota(shard.begin(), shard.end(), index_t(0));

  std::vector<GradientOracle> oracles;
  oracles.emplace_back(ObjectiveKind::least_squares, &ds, shard, 4, Rng(0, 0));
  SwiftRunParams params;
  params.iterations = 1000;
  params.gamma = 0.05;
  params.comm_set_s = 0;
  params.seed = seed;
  RunResult run = run_probabilistic(t, vectors, p, oracles, vector_t::Zero(4), params);

  GradientOracle ref(ObjectiveKind::least_squares, &ds, shard, 4,
                     Rng(seed, kClientStreamBase));
  vector_t x = vector_t::Zero(4);
  for (index_t k = 0; k < 1000; ++k) {
    vector_t g = ref.gradient(x, ref.sample_batch());
    x -= params.gamma * g;
  }
  CHECK(run.states[0].model == x);
  CHECK(run.updates_per_client[0] == 1000);
  CHECK(run.records.back().consensus_dist == 0.0);
}

TEST_CASE("mixing and descent commute with the shadow matrix recursion") {
  Rng rng(606, 2);
  Topology t = swift_test::random_connected_graph(4, rng);
  vector_t p = swift_test::random_influence(4, rng);
  auto vectors = ccs(t, p);
  Dataset ds = make_regression_dataset(40, 3, 0.5, 19);
  Partition part = partition_iid(ds, 4, 3);
  std::vector<GradientOracle> oracles;
  for (index_t i = 0; i < 4; ++i)
    oracles.emplace_back(ObjectiveKind::least_squares, &ds, part[static_cast<std::size_t>(i)], 2,
                         Rng(0, 0));

  SwiftRunParams params;
  params.iterations = 200;
  params.gamma = 0.05;
  params.comm_set_s = 1;
  params.seed = 33;
  params.shadow_check = true;
  RunResult run = run_probabilistic(t, vectors, p, oracles, vector_t::Zero(3), params);
  CHECK(run.max_shadow_gap >= 0);
  CHECK(run.max_shadow_gap <= 1e-12);
}

TEST_CASE("ring descent drives the global objective down") {
  Bench b = make_bench(8, 3, 25, 91);
  SwiftRunParams params;
  params.iterations = 4000;
  params.gamma = 0.5 / lipschitz_estimate(b.oracles);
  params.seed = 7;
  RunResult run = run_probabilistic(b.topo, b.vectors, b.p, b.oracles, b.x0, params);
  CHECK(run.records.back().global_loss < 0.5 * run.records.front().global_loss);
  CHECK(run.records.back().consensus_dist < 0.05);
  index_t total = std::accumulate(run.updates_per_client.begin(), run.updates_per_client.end(),
                                  index_t(0));
  CHECK(total == 4000);
  CHECK(run.broadcasts == 4000);
}

TEST_CASE("evaluation cadence covers start, stride, and horizon") {
  Bench b = make_bench(4, 2, 10, 23);
  SwiftRunParams params;
  params.iterations = 10;
  params.gamma = 0.05;
  params.seed = 3;
  RunResult run = run_probabilistic(b.topo, b.vectors, b.p, b.oracles, b.x0, params);
  REQUIRE(run.records.size() == 4);  // t = 0, 4, 8, 10
  CHECK(run.records[0].t == 0);
  CHECK(run.records[1].t == 4);
  CHECK(run.records[2].t == 8);
  CHECK(run.records[3].t == 10);
  for (const auto& r : run.records) {
    CHECK(r.sim_time_s == 0.0);
    CHECK(r.broadcasts == r.t);
  }

  params.eval_every = 3;
  Bench c = make_bench(4, 2, 10, 23);
  RunResult strided = run_probabilistic(c.topo, c.vectors, c.p, c.oracles, c.x0, params);
  REQUIRE(strided.records.size() == 5);  // t = 0, 3, 6, 9, 10
  CHECK(strided.records[3].t == 9);
  CHECK(strided.records.back().t == 10);
}

TEST_CASE("halving the communication set halves the averaging events") {
  SwiftRunParams params;
  params.iterations = 3000;
  params.gamma = 0.02;
  params.seed = 55;

  params.comm_set_s = 0;
  Bench a = make_bench(6, 3, 20, 77);
  RunResult dense = run_probabilistic(a.topo, a.vectors, a.p, a.oracles, a.x0, params);

  params.comm_set_s = 1;
  Bench b = make_bench(6, 3, 20, 77);
  RunResult sparse = run_probabilistic(b.topo, b.vectors, b.p, b.oracles, b.x0, params);

  // Same seed, same activation sequence: update counts agree client by client.
  CHECK(dense.updates_per_client == sparse.updates_per_client);
  for (index_t i = 0; i < 6; ++i) {
    index_t u = dense.updates_per_client[static_cast<std::size_t>(i)];
    CHECK(dense.avg_events_per_client[static_cast<std::size_t>(i)] == u);
    CHECK(sparse.avg_events_per_client[static_cast<std::size_t>(i)] == u / 2);
  }
}

TEST_CASE("runaway steps raise the divergence guard") {
  Bench b = make_bench(4, 3, 15, 13);
  SwiftRunParams params;
  params.iterations = 5000;
  params.gamma = 10.0 / lipschitz_estimate(b.oracles);
  params.seed = 2;
  params.divergence_factor = 1e3;
  CHECK_THROWS_AS(run_probabilistic(b.topo, b.vectors, b.p, b.oracles, b.x0, params),
                  DivergenceError);
}

TEST_CASE("run inputs are validated") {
  Bench b = make_bench(4, 2, 10, 31);
  SwiftRunParams params;
  params.iterations = 10;
  params.gamma = 0.1;

  SUBCASE("step size") {
    params.gamma = 0;
    CHECK_THROWS_AS(run_probabilistic(b.topo, b.vectors, b.p, b.oracles, b.x0, params),
                    std::invalid_argument);
  }
  SUBCASE("oracle count") {
    b.oracles.pop_back();
    CHECK_THROWS_AS(run_probabilistic(b.topo, b.vectors, b.p, b.oracles, b.x0, params),
                    std::invalid_argument);
  }
  SUBCASE("influence must be a probability vector") {
    b.p(0) = 0.9;
    CHECK_THROWS_AS(run_probabilistic(b.topo, b.vectors, b.p, b.oracles, b.x0, params),
                    std::invalid_argument);
  }
  SUBCASE("model dimension") {
    CHECK_THROWS_AS(run_probabilistic(b.topo, b.vectors, b.p, b.oracles, vector_t::Zero(5), params),
                    std::invalid_argument);
  }
  SUBCASE("weights must stay inside the neighborhood") {
    b.vectors[0].w(2) = b.vectors[0].w(0);  // ring(4): 2 is not adjacent to 0
    b.vectors[0].w(0) = 0;
    CHECK_THROWS_AS(run_probabilistic(b.topo, b.vectors, b.p, b.oracles, b.x0, params),
                    std::invalid_argument);
  }
  SUBCASE("timing lengths and signs") {
    EventTiming bad{{1, 1, 1}, {0, 0, 0, 0}, {1, 1, 1, 1}};
    CHECK_THROWS_AS(run_event_driven(b.topo, b.vectors, b.p, b.oracles, b.x0, bad, params),
                    std::invalid_argument);
    EventTiming neg{{1, 1, 1, 1}, {0, 0, -0.1, 0}, {1, 1, 1, 1}};
    CHECK_THROWS_AS(run_event_driven(b.topo, b.vectors, b.p, b.oracles, b.x0, neg, params),
                    std::invalid_argument);
    EventTiming zero_slow{{1, 1, 1, 1}, {0, 0, 0, 0}, {1, 0, 1, 1}};
    CHECK_THROWS_AS(run_event_driven(b.topo, b.vectors, b.p, b.oracles, b.x0, zero_slow, params),
                    std::invalid_argument);
  }
}

TEST_CASE("equal event timing spreads updates evenly and accrues comm time") {
  Bench b = make_bench(5, 3, 12, 47);
  EventTiming timing{std::vector<scalar_t>(5, 1.0), std::vector<scalar_t>(5, 0.2),
                     std::vector<scalar_t>(5, 1.0)};
  SwiftRunParams params;
  params.iterations = 503;
  params.gamma = 0.05;
  params.seed = 11;
  RunResult run = run_event_driven(b.topo, b.vectors, b.p, b.oracles, b.x0, timing, params);

  index_t lo = *std::min_element(run.updates_per_client.begin(), run.updates_per_client.end());
  index_t hi = *std::max_element(run.updates_per_client.begin(), run.updates_per_client.end());
  CHECK(hi - lo <= 1);
  CHECK(std::accumulate(run.updates_per_client.begin(), run.updates_per_client.end(), index_t(0)) ==
        503);
  CHECK(run.final_time > 0);
  for (index_t i = 0; i < 5; ++i) {
    const auto& times = run.event_times_per_client[static_cast<std::size_t>(i)];
    CHECK(static_cast<index_t>(times.size()) == run.updates_per_client[static_cast<std::size_t>(i)]);
    CHECK(std::is_sorted(times.begin(), times.end()));
    // Every update averages under s = 0, so each event costs compute + comm.
    CHECK(run.comm_time_per_client[static_cast<std::size_t>(i)] ==
          doctest::Approx(0.2 * static_cast<scalar_t>(
                                    run.avg_events_per_client[static_cast<std::size_t>(i)]))
              .epsilon(1e-12));
    CHECK(run.avg_events_per_client[static_cast<std::size_t>(i)] ==
          run.updates_per_client[static_cast<std::size_t>(i)]);
  }

  Bench c = make_bench(5, 3, 12, 47);
  RunResult again = run_event_driven(c.topo, c.vectors, c.p, c.oracles, c.x0, timing, params);
  CHECK(again.event_times_per_client == run.event_times_per_client);
  for (index_t i = 0; i < 5; ++i)
    CHECK(again.states[static_cast<std::size_t>(i)].model ==
          run.states[static_cast<std::size_t>(i)].model);
}

TEST_CASE("a slow client falls behind instead of stalling the ring") {
  Bench b = make_bench(6, 3, 12, 53);
  EventTiming timing{std::vector<scalar_t>(6, 1.0), std::vector<scalar_t>(6, 0.2),
                     std::vector<scalar_t>(6, 1.0)};
  timing.slowdown[2] = 4.0;
  SwiftRunParams params;
  params.iterations = 1200;
  params.gamma = 0.05;
  params.seed = 29;
  RunResult run = run_event_driven(b.topo, b.vectors, b.p, b.oracles, b.x0, timing, params);

  scalar_t slow = static_cast<scalar_t>(run.updates_per_client[2]);
  for (index_t i = 0; i < 6; ++i) {
    if (i == 2) continue;
    scalar_t ratio = slow / static_cast<scalar_t>(run.updates_per_client[static_cast<std::size_t>(i)]);
    // duration 4.2 vs 1.2: completion rates sit near 1.2/4.2.
    CHECK(ratio > 0.2);
    CHECK(ratio < 0.4);
  }
}

TEST_CASE("per-client event clocks ignore another client's slow link") {
  SwiftRunParams params;
  params.iterations = 800;
  params.gamma = 0.05;
  params.seed = 71;
  EventTiming base{std::vector<scalar_t>(5, 1.0), std::vector<scalar_t>(5, 0.2),
                   std::vector<scalar_t>(5, 1.0)};
  EventTiming slow_link = base;
  slow_link.comm[0] = 2.0;

  Bench a = make_bench(5, 3, 12, 61);
  RunResult before = run_event_driven(a.topo, a.vectors, a.p, a.oracles, a.x0, base, params);
  Bench c = make_bench(5, 3, 12, 61);
  RunResult after = run_event_driven(c.topo, c.vectors, c.p, c.oracles, c.x0, slow_link, params);

  CHECK(after.event_times_per_client[0][0] > before.event_times_per_client[0][0]);
  for (index_t i = 1; i < 5; ++i) {
    const auto& t0 = before.event_times_per_client[static_cast<std::size_t>(i)];
    const auto& t1 = after.event_times_per_client[static_cast<std::size_t>(i)];
    std::size_t common = std::min(t0.size(), t1.size());
    REQUIRE(common > 0);
    for (std::size_t k = 0; k < common; ++k) CHECK(t0[k] == t1[k]);
  }
}

TEST_CASE("consensus helpers reduce the client models") {
  Topology t = make_ring(3);
  auto states = init_states(t, vector_t::Zero(2));
  states[0].model = swift_test::vec({1.0, 0.0});
  states[1].model = swift_test::vec({2.0, 3.0});
  states[2].model = swift_test::vec({3.0, -3.0});
  vector_t mean = consensus_model(states);
  CHECK(mean(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mean(1) == doctest::Approx(0.0).epsilon(1e-15));
  vector_t point = swift_test::vec({1.0, 0.0, 0.0});
  CHECK(consensus_distance(states, point) ==
        doctest::Approx((mean - states[0].model).squaredNorm()).epsilon(1e-12));
  CHECK(consensus_distance(states, uniform_influence(3)) > 0);
}
