#pragma once

#include <string>
#include <utility>
#include <vector>

#include "swift/types.hpp"

namespace swift {

/**
 * Undirected communication graph. Invariants: adjacency is symmetric,
 * self-loop free and sorted per client; degrees[i] == adjacency[i].size().
 */
struct Topology {
  index_t n = 0;
  std::vector<std::vector<index_t>> adjacency;
  std::vector<index_t> degrees;

  bool is_neighbor(index_t i, index_t j) const;
};

// Builds a validated Topology from an undirected edge list.
Topology make_topology(index_t n, const std::vector<std::pair<index_t, index_t>>& edges);

// Cycle over n >= 2 clients; n == 2 stores the single pair once.
Topology make_ring(index_t n);

// `clusters` contiguous cliques (larger ones first) joined in a ring by one
// bridge per adjacent pair: highest index of clique k to lowest of k+1 mod clusters.
Topology make_ring_of_cliques(index_t n, index_t clusters);

// One "i j" pair per line, 0-indexed; blank lines and '#' comments ignored.
Topology load_edge_list(const std::string& path);

// True iff breadth-first traversal from client 0 reaches all n clients.
bool is_connected(const Topology& t);

index_t edge_count(const Topology& t);

}  // namespace swift
