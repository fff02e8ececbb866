#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "subtask_forge/lmdp.hpp"

namespace gen {

using subtask_forge::Index;
using subtask_forge::Lmdp;
using subtask_forge::Matrix;
using subtask_forge::SparseMatrix;
using subtask_forge::Vector;

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int integer(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Matrix positive_matrix(Rng& rng, Index rows, Index cols, double lo = 0.1, double hi = 2.0) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = uniform(rng, lo, hi);
  return m;
}

inline Vector positive_vector(Rng& rng, Index n, double lo = 0.1, double hi = 2.0) {
  return positive_matrix(rng, n, 1, lo, hi).col(0);
}

inline SparseMatrix sparse(const Matrix& dense) { return dense.sparseView(); }

// Two interior states and one exit: s1 -> s2 or exit with 0.5 each, s2 -> s1.
inline Lmdp two_state_chain(double r = -1.0, double lambda = 1.0) {
  Lmdp l;
  l.space = {2, 1, {"s1", "s2", "b"}};
  Matrix pii = Matrix::Zero(2, 2);
  pii(1, 0) = 0.5;
  pii(0, 1) = 1.0;
  Matrix pbi = Matrix::Zero(1, 2);
  pbi(0, 0) = 0.5;
  l.dynamics = {sparse(pii), sparse(pbi)};
  l.r_interior = Vector::Constant(2, r);
  l.lambda = lambda;
  return l;
}

inline Lmdp single_state(double r = 0.0) {
  Lmdp l;
  l.space = {1, 1, {}};
  l.dynamics = {SparseMatrix(1, 1), sparse(Matrix::Ones(1, 1))};
  l.r_interior = Vector::Constant(1, r);
  return l;
}

// Random finite-exit Lmdp: each interior column spreads over a few interior
// successors and at least one boundary state with exit mass >= min_exit.
inline Lmdp random_lmdp(Rng& rng, int n_int, int n_b, double min_exit = 0.05) {
  Matrix pii = Matrix::Zero(n_int, n_int);
  Matrix pbi = Matrix::Zero(n_b, n_int);
  for (int s = 0; s < n_int; ++s) {
    const int fan = integer(rng, 1, std::min(4, n_int));
    for (int f = 0; f < fan; ++f) pii(integer(rng, 0, n_int - 1), s) += uniform(rng, 0.1, 1.0);
    const double exit = uniform(rng, min_exit, 0.5);
    const double total = pii.col(s).sum();
    pii.col(s) *= (1.0 - exit) / total;
    const int b = integer(rng, 0, n_b - 1);
    const int b2 = integer(rng, 0, n_b - 1);
    const double split = uniform(rng, 0.0, 1.0);
    pbi(b, s) += exit * split;
    pbi(b2, s) += exit * (1.0 - split);
  }
  Lmdp l;
  l.space = {static_cast<std::size_t>(n_int), static_cast<std::size_t>(n_b), {}};
  l.dynamics = {sparse(pii), sparse(pbi)};
  l.r_interior = Vector(n_int);
  for (int s = 0; s < n_int; ++s) l.r_interior[s] = uniform(rng, -2.0, 0.0);
  l.lambda = uniform(rng, 0.5, 2.0);
  return l;
}

inline double rel_max_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace gen
