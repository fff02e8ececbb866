#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "subtask_forge/types.hpp"

namespace subtask_forge {

struct NmfOptions {
  std::size_t max_iter = 5000;
  /// Stop once the relative objective change of one iteration drops below tol.
  double tol = 1e-9;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
};

/// Z ~= D W with D (n_interior x k) and W (k x n_tasks) nonnegative. Columns
/// of D are L1-normalized; their scale is carried by the rows of W.
struct Factorization {
  Matrix D;
  Matrix W;
  double beta = 1.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;
  std::size_t best_restart = 0;
  std::size_t iterations = 0;
  bool iteration_limit_hit = false;
  /// Objective of the selected restart: initial value, then one per iteration.
  std::vector<double> divergence_trace;
  /// Final objective of every restart, by restart index.
  std::vector<double> restart_divergences;
  double divergence = 0.0;
  /// divergence / d_beta(Z || mean(Z)).
  double normalized_divergence = 0.0;
};

/// Elementwise sum of the beta-divergence d_beta(a || b):
///   beta = 2: (a - b)^2 / 2
///   beta = 1: a log(a / b) - a + b   (0 log 0 = 0)
///   beta = 0: a / b - log(a / b) - 1
///   else:     (a^beta + (beta - 1) b^beta - beta a b^(beta - 1)) / (beta (beta - 1))
double beta_divergence(const Matrix& A, const Matrix& B, double beta);

/// d_beta(Z || DW) normalized by d_beta(Z || mean(Z)); 0 reference maps to
/// the raw divergence.
double normalized_beta_divergence(const Matrix& Z, const Matrix& approx, double beta);

/// Multiplicative-update minimization of d_beta(Z || DW) from `restarts`
/// seeded initializations; returns the lowest-divergence restart.
///
/// Updates use the majorization-minimization exponent gamma(beta)
/// (1 / (2 - beta) for beta < 1, 1 on [1, 2], 1 / (beta - 1) above), which
/// makes every iteration non-increasing in the objective. Each restart draws
/// from an independent stream keyed by (seed, k, restart), so results do not
/// depend on scheduling.
Factorization nmf(const Matrix& Z, std::size_t k, double beta, const NmfOptions& opts = {});

/// One multiplicative-update run from the given initial factors, without
/// normalization or restarts. Exposed for tests and for callers that want to
/// hold extra structure fixed: only columns of D flagged in update_d_cols are
/// updated (empty = all).
Factorization nmf_from(const Matrix& Z, Matrix D, Matrix W, double beta, std::size_t max_iter,
                       double tol, const std::vector<bool>& update_d_cols = {});

/// Rescales columns of D to unit L1 norm and rows of W inversely.
void normalize_columns(Matrix& D, Matrix& W);

enum class ElbowRule {
  /// Smallest k with |f(k+1) - f(k)| < |f(k) - f(k-1)|.
  first_satisfying,
  /// Among the k satisfying that inequality, the one where the drop in the
  /// decrement is largest, |f(k) - f(k-1)| / |f(k+1) - f(k)|.
  sharpest,
};

struct KSelection {
  /// f[k - 1] = best normalized divergence at rank k, k = 1..k_max.
  std::vector<double> f;
  /// Running minimum of f.
  std::vector<double> clipped;
  std::optional<std::size_t> k_star;
  std::size_t restarts = 0;
  double beta = 1.0;
};

/// Elbow of a curve given as f[k - 1], after running-minimum clipping.
/// Returns nullopt when no k in [2, size - 1] satisfies the inequality.
std::optional<std::size_t> elbow(std::span<const double> f, ElbowRule rule = ElbowRule::sharpest);

KSelection select_k(const Matrix& Z, double beta, std::size_t k_max, const NmfOptions& opts = {},
                    ElbowRule rule = ElbowRule::sharpest);

}  // namespace subtask_forge
