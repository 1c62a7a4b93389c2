#pragma once

#include <set>
#include <utility>
#include <vector>

#include "swift/learning.hpp"
#include "swift/rng.hpp"
#include "swift/topology.hpp"
#include "swift/types.hpp"

namespace swift_test {

inline swift::vector_t vec(std::initializer_list<swift::scalar_t> xs) {
  swift::vector_t v(static_cast<swift::index_t>(xs.size()));
  swift::index_t i = 0;
  for (auto x : xs) v(i++) = x;
  return v;
}

// Random spanning tree plus a per-graph random density of extra edges.
inline swift::Topology random_connected_graph(swift::index_t n, swift::Rng& rng) {
  std::vector<std::pair<swift::index_t, swift::index_t>> edges;
  std::set<std::pair<swift::index_t, swift::index_t>> seen;
  for (swift::index_t k = 1; k < n; ++k) {
    auto e = std::make_pair(static_cast<swift::index_t>(rng.below(static_cast<std::uint64_t>(k))), k);
    edges.push_back(e);
    seen.insert(e);
  }
  const double extra = rng.uniform01() * 0.4;
  for (swift::index_t i = 0; i < n; ++i)
    for (swift::index_t j = i + 1; j < n; ++j)
      if (!seen.count({i, j}) && rng.uniform01() < extra) {
        edges.push_back({i, j});
        seen.insert({i, j});
      }
  return swift::make_topology(n, edges);
}

// Random influence vector with entries bounded away from zero.
inline swift::vector_t random_influence(swift::index_t n, swift::Rng& rng) {
  swift::vector_t p(n);
  for (swift::index_t i = 0; i < n; ++i) p(i) = 0.2 + rng.uniform01();
  p /= p.sum();
  return p;
}

// Largest |eigenvalue| of m after deflating the all-ones direction; squared,
// this is an independent check of the contraction factor of m^T m.
inline swift::scalar_t second_abs_eigenvalue(const swift::matrix_t& m, swift::Rng& rng,
                                             int iters = 5000) {
  const swift::index_t n = m.rows();
  swift::matrix_t b = m - swift::matrix_t::Constant(n, n, 1.0 / static_cast<double>(n));
  swift::vector_t v(n);
  for (swift::index_t i = 0; i < n; ++i) v(i) = rng.normal();
  v.normalize();
  swift::scalar_t lambda = 0;
  for (int k = 0; k < iters; ++k) {
    v = b * v;
    lambda = v.norm();
    if (lambda < 1e-300) return 0;
    v /= lambda;
  }
  return lambda;
}

// Central finite differences over the same rows the analytic gradient sees.
inline swift::vector_t fd_gradient(const swift::GradientOracle& o, const swift::vector_t& x,
                                   const std::vector<swift::index_t>& rows,
                                   swift::scalar_t h = 1e-6) {
  swift::vector_t g(x.size());
  swift::vector_t xp = x;
  for (swift::index_t j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + h;
    swift::scalar_t up = o.loss(xp, rows);
    xp(j) = x(j) - h;
    swift::scalar_t down = o.loss(xp, rows);
    xp(j) = x(j);
    g(j) = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace swift_test
