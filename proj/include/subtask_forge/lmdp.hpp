#pragma once

#include <string>
#include <vector>

#include "subtask_forge/types.hpp"

namespace subtask_forge {

/// Interior states come first, boundary states after them. Labels are
/// optional; when present there is one per state in that order.
struct StateSpace {
  std::size_t n_interior = 0;
  std::size_t n_boundary = 0;
  std::vector<std::string> labels;

  std::size_t size() const { return n_interior + n_boundary; }
};

/// Passive dynamics in the column convention: entry (i, s) is the probability
/// of moving from interior state s to state i. Boundary states are absorbing
/// and store no outgoing transitions.
struct PassiveDynamics {
  SparseMatrix interior;  // n_interior x n_interior
  SparseMatrix boundary;  // n_boundary x n_interior
};

struct Lmdp {
  StateSpace space;
  PassiveDynamics dynamics;
  Vector r_interior;
  double lambda = 1.0;

  std::size_t n_interior() const { return space.n_interior; }
  std::size_t n_boundary() const { return space.n_boundary; }

  /// q_i = exp(r_interior / lambda).
  Vector interior_gain() const;
};

struct Diagnostics {
  bool pass = true;
  std::vector<std::string> violations;
};

/// Collects every violated Lmdp invariant. Never throws.
Diagnostics validate_lmdp(const Lmdp& lmdp, double stochastic_tol = 1e-12);

/// Exact desirability for one boundary reward vector via a sparse LU solve of
///   z(s) = q_i(s) * [ sum_i P_ii(i,s) z(i) + sum_b P_bi(b,s) q_b(b) ].
/// Throws DomainError on non-positive q_b and SingularSystemError when the
/// interior dynamics are not contractive.
Vector solve_finite_exit(const Lmdp& lmdp, const Vector& q_b);

/// Column-wise solve sharing one factorization. Columns of q_b may contain
/// zeros as long as each column has a positive entry.
Matrix solve_finite_exit(const Lmdp& lmdp, const Matrix& q_b);

/// Fixed-point iteration of the same equation starting from z = 1. Only used
/// as an independent check on solve_finite_exit.
Vector solve_iterative(const Lmdp& lmdp, const Vector& q_b, double tol,
                       std::size_t max_iter);

/// Max-norm residual of the fixed-point equation.
double bellman_residual(const Lmdp& lmdp, const Vector& z, const Vector& q_b);

/// V(s) = lambda * log z(s).
Vector value_from_desirability(const Vector& z, double lambda);

/// Optimal controlled dynamics, same layout as PassiveDynamics:
///   a(x'|s) = P(x'|s) z~(x') / sum_x'' P(x''|s) z~(x'')
/// where z~ is z on interior states and q_b on boundary states.
PassiveDynamics optimal_policy(const Lmdp& lmdp, const Vector& z,
                               const Vector& q_b);

}  // namespace subtask_forge
