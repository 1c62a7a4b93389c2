#include "swift/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace swift {

bool Topology::is_neighbor(index_t i, index_t j) const {
  const auto& row = adjacency[static_cast<std::size_t>(i)];
  return std::binary_search(row.begin(), row.end(), j);
}

Topology make_topology(index_t n, const std::vector<std::pair<index_t, index_t>>& edges) {
  if (n < 1) throw std::invalid_argument("topology: client count must be >= 1");
  std::set<std::pair<index_t, index_t>> seen;
  Topology t;
  t.n = n;
  t.adjacency.assign(static_cast<std::size_t>(n), {});
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw std::invalid_argument("topology: edge endpoint out of range");
    if (a == b) throw std::invalid_argument("topology: self-loops are not allowed");
    auto key = std::minmax(a, b);
    if (!seen.insert({key.first, key.second}).second)
      throw std::invalid_argument("topology: duplicate edge");
    t.adjacency[static_cast<std::size_t>(a)].push_back(b);
    t.adjacency[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& row : t.adjacency) std::sort(row.begin(), row.end());
  t.degrees.resize(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i)
    t.degrees[static_cast<std::size_t>(i)] =
        static_cast<index_t>(t.adjacency[static_cast<std::size_t>(i)].size());
  return t;
}

Topology make_ring(index_t n) {
  if (n < 2) throw std::invalid_argument("make_ring: need n >= 2");
  std::vector<std::pair<index_t, index_t>> edges;
  if (n == 2) {
    edges.push_back({0, 1});
  } else {
    for (index_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  }
  return make_topology(n, edges);
}

Topology make_ring_of_cliques(index_t n, index_t clusters) {
  if (clusters < 2) throw std::invalid_argument("make_ring_of_cliques: need clusters >= 2");
  if (n < 2 * clusters)
    throw std::invalid_argument("make_ring_of_cliques: need n >= 2*clusters");
  // Sizes as equal as possible, remainder spread over the first cliques.
  std::vector<index_t> sizes(static_cast<std::size_t>(clusters), n / clusters);
  for (index_t k = 0; k < n % clusters; ++k) sizes[static_cast<std::size_t>(k)] += 1;
  std::vector<index_t> start(static_cast<std::size_t>(clusters) + 1, 0);
  for (index_t k = 0; k < clusters; ++k)
    start[static_cast<std::size_t>(k) + 1] =
        start[static_cast<std::size_t>(k)] + sizes[static_cast<std::size_t>(k)];

  std::vector<std::pair<index_t, index_t>> edges;
  for (index_t k = 0; k < clusters; ++k) {
    index_t lo = start[static_cast<std::size_t>(k)];
    index_t hi = start[static_cast<std::size_t>(k) + 1];
    for (index_t a = lo; a < hi; ++a)
      for (index_t b = a + 1; b < hi; ++b) edges.push_back({a, b});
    // Bridge: this clique's highest index to the next clique's lowest.
    index_t nk = (k + 1) % clusters;
    edges.push_back({hi - 1, start[static_cast<std::size_t>(nk)]});
  }
  return make_topology(n, edges);
}

Topology load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_edge_list: cannot open " + path);
  std::vector<std::pair<index_t, index_t>> edges;
  index_t max_index = -1;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long a = 0, b = 0;
    if (!(ls >> a)) continue;  // blank line
    if (!(ls >> b)) throw std::invalid_argument("load_edge_list: malformed line in " + path);
    edges.push_back({static_cast<index_t>(a), static_cast<index_t>(b)});
    max_index = std::max(max_index, static_cast<index_t>(std::max(a, b)));
  }
  if (max_index < 0) throw std::invalid_argument("load_edge_list: no edges in " + path);
  return make_topology(max_index + 1, edges);
}

bool is_connected(const Topology& t) {
  if (t.n <= 1) return true;
  std::vector<char> seen(static_cast<std::size_t>(t.n), 0);
  std::vector<index_t> queue{0};
  seen[0] = 1;
  index_t reached = 1;
  while (!queue.empty()) {
    index_t v = queue.back();
    queue.pop_back();
    for (index_t u : t.adjacency[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        ++reached;
        queue.push_back(u);
      }
    }
  }
  return reached == t.n;
}

index_t edge_count(const Topology& t) {
  index_t twice = 0;
  for (const auto& row : t.adjacency) twice += static_cast<index_t>(row.size());
  return twice / 2;
}

}  // namespace swift
