#include "swift/weights.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace swift {

vector_t uniform_influence(index_t n) {
  return vector_t::Constant(n, scalar_t(1) / static_cast<scalar_t>(n));
}

void validate_influence(const vector_t& p, index_t n) {
  if (p.size() != n)
    throw std::invalid_argument("influence: expected " + std::to_string(n) + " entries, got " +
                                std::to_string(p.size()));
  for (index_t i = 0; i < n; ++i) {
    if (!std::isfinite(p(i)) || p(i) < 0)
      throw std::invalid_argument("influence: entry " + std::to_string(i) +
                                  " must be finite and >= 0");
  }
  if (std::abs(p.sum() - scalar_t(1)) > 1e-9)
    throw std::invalid_argument("influence: entries must sum to 1");
}

namespace {

// Connected components of the subgraph induced by one degree class; the tie
// branch shares (s_w, s_p) maxima over each component.
std::vector<std::vector<index_t>> tie_components(const Topology& t,
                                                 const std::vector<index_t>& members) {
  std::vector<char> in_class(static_cast<std::size_t>(t.n), 0);
  for (index_t i : members) in_class[static_cast<std::size_t>(i)] = 1;
  std::vector<char> seen(static_cast<std::size_t>(t.n), 0);
  std::vector<std::vector<index_t>> comps;
  for (index_t root : members) {
    if (seen[static_cast<std::size_t>(root)]) continue;
    std::vector<index_t> comp, stack{root};
    seen[static_cast<std::size_t>(root)] = 1;
    while (!stack.empty()) {
      index_t v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (index_t u : t.adjacency[static_cast<std::size_t>(v)]) {
        if (in_class[static_cast<std::size_t>(u)] && !seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = 1;
          stack.push_back(u);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

}  // namespace

std::vector<CommunicationVector> ccs(const Topology& t, const vector_t& p) {
  const index_t n = t.n;
  validate_influence(p, n);
  for (index_t i = 0; i < n; ++i)
    if (p(i) <= 0)
      throw std::invalid_argument("ccs: influence entry " + std::to_string(i) +
                                  " must be strictly positive");
  if (!is_connected(t)) throw std::invalid_argument("ccs: topology must be connected");

  bool uniform = true;
  for (index_t i = 0; i < n && uniform; ++i)
    uniform = std::abs(p(i) - scalar_t(1) / static_cast<scalar_t>(n)) <= kAlgebraTol;

  // Non-uniform influence reserves 1/n on the diagonal before distribution,
  // which keeps the self-weight floor provable.
  std::vector<vector_t> w(static_cast<std::size_t>(n), vector_t::Zero(n));
  if (!uniform)
    for (index_t i = 0; i < n; ++i)
      w[static_cast<std::size_t>(i)](i) = scalar_t(1) / static_cast<scalar_t>(n);

  // Closed-neighborhood influence mass; every proportional share is measured
  // against it so a client can never be promised more than its neighbors'
  // combined stake.
  vector_t mass(n);
  for (index_t i = 0; i < n; ++i) {
    mass(i) = p(i);
    for (index_t j : t.adjacency[static_cast<std::size_t>(i)]) mass(i) += p(j);
  }
  const scalar_t reserved = uniform ? scalar_t(0) : scalar_t(1) / static_cast<scalar_t>(n);

  // Waterfall: descending degree, so every strictly-larger-degree neighbor has
  // already dictated its coefficient by the time a client distributes.
  std::vector<index_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), index_t(0));
  std::sort(order.begin(), order.end(), [&](index_t a, index_t b) {
    auto da = t.degrees[static_cast<std::size_t>(a)], db = t.degrees[static_cast<std::size_t>(b)];
    return da != db ? da > db : a < b;
  });

  std::size_t pos = 0;
  while (pos < order.size()) {
    const index_t deg = t.degrees[static_cast<std::size_t>(order[pos])];
    std::vector<index_t> members;
    while (pos < order.size() && t.degrees[static_cast<std::size_t>(order[pos])] == deg)
      members.push_back(order[pos++]);

    for (const auto& comp : tie_components(t, members)) {
      if (comp.size() > 1) {
        // Tie branch: exchanged (s_w, s_p) maxima over the component. Taking
        // the max denominator keeps every assignment at or below the
        // receiver's p(j)/mass share, so ties never over-allocate.
        scalar_t sw_star = 0, sp_star = 0;
        for (index_t i : comp) {
          sw_star = std::max(sw_star, w[static_cast<std::size_t>(i)].sum());
          sp_star = std::max(sp_star, mass(i));
        }
        for (index_t i : comp)
          for (index_t j : t.adjacency[static_cast<std::size_t>(i)])
            if (t.degrees[static_cast<std::size_t>(j)] == deg)
              w[static_cast<std::size_t>(i)](j) = (1 - sw_star) * p(j) / sp_star;
      }
      // Residual: distributed to the strictly-smaller neighbors in proportion
      // to influence over the closed-neighborhood mass, mirrored into the
      // receiver. The pair share is clamped to the receiver's remaining
      // budget, and whatever is not handed out stays on the diagonal, which
      // closes the sum to exactly 1.
      for (index_t i : comp) {
        const scalar_t share = (1 - w[static_cast<std::size_t>(i)].sum()) / mass(i);
        for (index_t j : t.adjacency[static_cast<std::size_t>(i)]) {
          if (t.degrees[static_cast<std::size_t>(j)] < deg) {
            const scalar_t c = std::min(share, (1 - reserved) / mass(j));
            w[static_cast<std::size_t>(i)](j) = c * p(j);
            w[static_cast<std::size_t>(j)](i) = c * p(i);
          }
        }
        w[static_cast<std::size_t>(i)](i) += 1 - w[static_cast<std::size_t>(i)].sum();
      }
    }
  }

  const scalar_t floor = scalar_t(1) / static_cast<scalar_t>(n);
  std::vector<CommunicationVector> out;
  out.reserve(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) {
    const vector_t& wi = w[static_cast<std::size_t>(i)];
    if (std::abs(wi.sum() - 1) > kAlgebraTol)
      throw std::logic_error("ccs: internal consistency failure, vector sum != 1 at client " +
                             std::to_string(i));
    if (wi(i) + kAlgebraTol < floor)
      throw std::logic_error("ccs: internal consistency failure, self weight below 1/n at client " +
                             std::to_string(i));
    for (index_t j = 0; j < n; ++j)
      if (wi(j) != 0 && j != i && !t.is_neighbor(i, j))
        throw std::logic_error("ccs: internal consistency failure, support outside neighborhood");
    out.push_back({i, wi});
  }
  return out;
}

matrix_t active_matrix(const std::vector<CommunicationVector>& vectors, index_t active,
                       bool communicate) {
  const index_t n = static_cast<index_t>(vectors.size());
  if (active < 0 || active >= n) throw std::invalid_argument("active_matrix: index out of range");
  matrix_t m = matrix_t::Identity(n, n);
  if (communicate) m.col(active) = vectors[static_cast<std::size_t>(active)].w;
  return m;
}

matrix_t expected_matrix(const std::vector<CommunicationVector>& vectors, const vector_t& p) {
  const index_t n = static_cast<index_t>(vectors.size());
  validate_influence(p, n);
  matrix_t m = matrix_t::Identity(n, n);
  for (index_t i = 0; i < n; ++i)
    m.col(i) += p(i) * (vectors[static_cast<std::size_t>(i)].w - vector_t::Unit(n, i));
  return m;
}

matrix_t vectors_as_matrix(const std::vector<CommunicationVector>& vectors) {
  const index_t n = static_cast<index_t>(vectors.size());
  matrix_t m(n, n);
  for (index_t i = 0; i < n; ++i) m.row(i) = vectors[static_cast<std::size_t>(i)].w.transpose();
  return m;
}

ExpectationReport verify_expectation(const matrix_t& m,
                                     const std::vector<CommunicationVector>& vectors,
                                     const vector_t& p) {
  const index_t n = m.rows();
  ExpectationReport r;
  r.max_asymmetry = (m - m.transpose()).cwiseAbs().maxCoeff();
  r.max_row_sum_error = (m.rowwise().sum().array() - 1).abs().maxCoeff();
  r.max_col_sum_error = (m.colwise().sum().array() - 1).abs().maxCoeff();
  r.min_entry = m.minCoeff();

  r.max_vector_sum_error = 0;
  r.min_self_weight_slack = 1;
  r.max_pairwise_violation = 0;
  const scalar_t floor = scalar_t(1) / static_cast<scalar_t>(n);
  for (index_t i = 0; i < n; ++i) {
    const vector_t& wi = vectors[static_cast<std::size_t>(i)].w;
    r.max_vector_sum_error = std::max(r.max_vector_sum_error, std::abs(wi.sum() - 1));
    r.min_self_weight_slack = std::min(r.min_self_weight_slack, wi(i) - floor);
    for (index_t j = 0; j < n; ++j) {
      scalar_t lhs = p(j) * vectors[static_cast<std::size_t>(j)].w(i);
      scalar_t rhs = p(i) * wi(j);
      r.max_pairwise_violation = std::max(r.max_pairwise_violation, std::abs(lhs - rhs));
    }
  }

  r.symmetric = r.max_asymmetry <= kAlgebraTol;
  r.doubly_stochastic = r.max_row_sum_error <= kAlgebraTol && r.max_col_sum_error <= kAlgebraTol &&
                        r.min_entry >= -kAlgebraTol;
  r.column_stochastic_vectors = r.max_vector_sum_error <= kAlgebraTol;
  r.self_weight_floor = r.min_self_weight_slack >= -kAlgebraTol;
  return r;
}

SpectralDiagnostics spectral(const matrix_t& m, index_t period_b) {
  const index_t n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("spectral: matrix must be square");
  if (period_b < 1) throw std::invalid_argument("spectral: period must be >= 1");
  if (n > 1 && (m - m.transpose()).cwiseAbs().maxCoeff() > kEigenTol)
    throw std::invalid_argument("spectral: matrix must be symmetric");

  SpectralDiagnostics d;
  if (n == 1) {
    d.rho = 0;
    d.nu = 0;
    d.rho_nu = 0;
    d.mixes = true;
    return d;
  }

  matrix_t s = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<matrix_t> es(s, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending
  d.rho = std::max(std::abs(ev(0)), std::abs(ev(n - 2)));

  const scalar_t nn = static_cast<scalar_t>(n);
  const scalar_t b = static_cast<scalar_t>(period_b);
  const scalar_t u = std::exp(-nn * b * std::log(nn));  // 1/n^(nB)
  d.nu = std::pow(1 - u, 1 / b);
  // 1 - nu^2 without cancellation; for B=1 this is u*(2-u) exactly.
  const scalar_t one_minus_nu_sq = -std::expm1((2 / b) * std::log1p(-u));

  const scalar_t sr = std::sqrt(d.rho);
  d.rho_nu = ((nn - 1) / nn) * (scalar_t(7) / (2 * (1 - d.rho)) + sr / ((1 - sr) * (1 - sr)) +
                                scalar_t(384) / one_minus_nu_sq);
  d.mixes = d.rho < 1;
  return d;
}

DecayCheck decay_check(const matrix_t& m, index_t horizon) {
  const index_t n = m.rows();
  if ((m.rowwise().sum().array() - 1).abs().maxCoeff() > kEigenTol ||
      (m.colwise().sum().array() - 1).abs().maxCoeff() > kEigenTol)
    throw std::invalid_argument("decay_check: matrix must be doubly stochastic");
  DecayCheck c;
  c.rho = spectral(m).rho;
  c.ok = true;
  c.worst_margin = -1;
  const vector_t mean = vector_t::Constant(n, scalar_t(1) / static_cast<scalar_t>(n));
  matrix_t powers = matrix_t::Identity(n, n);
  for (index_t t = 0; t <= horizon; ++t) {
    scalar_t measured = 0;
    for (index_t i = 0; i < n; ++i)
      measured = std::max(measured, (mean - powers.col(i)).squaredNorm());
    scalar_t bound =
        ((static_cast<scalar_t>(n) - 1) / static_cast<scalar_t>(n)) * std::pow(c.rho, t);
    c.rows.push_back({t, measured, bound});
    if (measured > bound + kAlgebraTol) c.ok = false;
    c.worst_margin = std::max(c.worst_margin, measured - bound);
    if (t < horizon) powers = m * powers;
  }
  return c;
}

void write_vectors(const std::string& path, const std::vector<CommunicationVector>& vectors) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_vectors: cannot open " + path);
  matrix_t m = vectors_as_matrix(vectors);
  char buf[40];
  for (index_t i = 0; i < m.rows(); ++i) {
    for (index_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << buf << (j + 1 < m.cols() ? " " : "");
    }
    out << "\n";
  }
}

}  // namespace swift
