#pragma once

#include <string>
#include <vector>

#include "swift/topology.hpp"
#include "swift/types.hpp"

namespace swift {

vector_t uniform_influence(index_t n);

// Throws unless p has length n, every entry > 0, and sums to 1 within 1e-9.
void validate_influence(const vector_t& p, index_t n);

/**
 * Client i's coefficient vector: w(j) weights client j's model in i's
 * neighborhood average. Invariants: sum(w) == 1, w(i) >= 1/n, support
 * limited to {i} and i's neighbors.
 */
struct CommunicationVector {
  index_t owner = 0;
  vector_t w;
};

/**
 * Communication coefficient selection. Deterministic waterfall pass over
 * clients by descending degree: coefficients dictated by larger-degree
 * neighbors arrive first, adjacent equal-degree clients share (s_w, s_p)
 * maxima over their tie component, and the residual mass is handed to the
 * strictly-smaller neighbors in proportion to influence over the client's
 * closed-neighborhood mass, with the leftover kept on the diagonal. Each
 * dictated pair is clamped to the receiver's budget, which keeps the self
 * weight at or above 1/n on every connected topology. The output satisfies
 * the pairwise balance p(j)*w_j(i) == p(i)*w_i(j), which makes the expected
 * matrix symmetric doubly stochastic.
 */
std::vector<CommunicationVector> ccs(const Topology& t, const vector_t& p);

// I_n when communicate is false, otherwise I_n with column `active` replaced
// by w_active. Always column-stochastic.
matrix_t active_matrix(const std::vector<CommunicationVector>& vectors, index_t active,
                       bool communicate);

// Column i is e_i + p(i) * (w_i - e_i); column-stochastic for any valid vectors.
matrix_t expected_matrix(const std::vector<CommunicationVector>& vectors, const vector_t& p);

// n x n matrix whose row i holds client i's coefficient vector.
matrix_t vectors_as_matrix(const std::vector<CommunicationVector>& vectors);

struct ExpectationReport {
  bool symmetric = false;
  bool doubly_stochastic = false;
  bool column_stochastic_vectors = false;
  bool self_weight_floor = false;
  scalar_t max_asymmetry = 0;          // max |m - m^T|
  scalar_t max_row_sum_error = 0;
  scalar_t max_col_sum_error = 0;
  scalar_t min_entry = 0;
  scalar_t max_vector_sum_error = 0;   // max |sum(w_i) - 1|
  scalar_t min_self_weight_slack = 0;  // min over i of w_i(i) - 1/n
  scalar_t max_pairwise_violation = 0; // max |p(j)*w_j(i) - p(i)*w_i(j)|

  bool all_ok() const {
    return symmetric && doubly_stochastic && column_stochastic_vectors && self_weight_floor;
  }
};

// Checks the expected matrix and its generating vectors at tolerance 1e-12.
ExpectationReport verify_expectation(const matrix_t& m,
                                     const std::vector<CommunicationVector>& vectors,
                                     const vector_t& p);

struct SpectralDiagnostics {
  scalar_t rho = 0;     // max{|lambda_2(m^T m)|, |lambda_n(m^T m)|}
  scalar_t nu = 0;      // (1 - 1/n^(nB))^(1/B)
  scalar_t rho_nu = 0;  // ((n-1)/n) * (7/(2(1-rho)) + sqrt(rho)/(1-sqrt(rho))^2 + 384/(1-nu^2))
  bool mixes = false;   // rho < 1
};

// m must be symmetric (checked, throws otherwise); B is the strong-connectivity
// period, 1 for a static connected graph. 1-nu^2 inside rho_nu is evaluated in
// closed form, since nu itself rounds to 1.0 in double for n >= 15.
SpectralDiagnostics spectral(const matrix_t& m, index_t period_b = 1);

struct DecayCheck {
  struct Row {
    index_t t = 0;
    scalar_t measured = 0;  // max over i of ||1/n - m^t e_i||^2
    scalar_t bound = 0;     // ((n-1)/n) * rho^t
  };
  std::vector<Row> rows;
  scalar_t rho = 0;
  bool ok = false;           // measured <= bound + 1e-12 at every t
  scalar_t worst_margin = 0; // max over t of measured - bound
};

// Verifies the geometric consensus decay of powers of a symmetric doubly
// stochastic matrix for every horizon t <= T.
DecayCheck decay_check(const matrix_t& m, index_t horizon);

// Writes vectors_as_matrix(vectors) as n rows of n space-separated decimals.
void write_vectors(const std::string& path, const std::vector<CommunicationVector>& vectors);

}  // namespace swift
