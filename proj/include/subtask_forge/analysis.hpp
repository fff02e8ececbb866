#pragma once

#include <span>
#include <vector>

#include "subtask_forge/factorize.hpp"
#include "subtask_forge/lmdp.hpp"

namespace subtask_forge {

enum class CompareMode {
  /// L1-normalized columns of D, matched by optimal assignment.
  generalized_actions,
  /// Reconstructions D W compared directly.
  reconstruction,
};

/// Minimum-cost perfect matching of a square cost matrix (Hungarian method).
/// Returns the column assigned to each row.
std::vector<std::size_t> optimal_assignment(const Matrix& cost);

/// m(F1, F2) = min over column permutations of ||D1 - D2 P||_F^2 on
/// L1-normalized columns (or ||D1 W1 - D2 W2||_F^2 in reconstruction mode).
double subtask_distance(const Factorization& a, const Factorization& b,
                        CompareMode mode = CompareMode::generalized_actions);

/// subtask_distance(a, b) < epsilon.
bool equivalent(const Factorization& a, const Factorization& b, double epsilon,
                CompareMode mode = CompareMode::generalized_actions);

/// g(s) = sum_i P_ii(i, s) ||w_i - w_s||^2, where w_s is the column of W for the
/// task anchored at the boundary twin of s (the boundary state s exits to with
/// the highest probability). Requires one task per boundary state.
Vector boundary_score(const Factorization& f, const Lmdp& lmdp);

struct PurityReport {
  double purity = 0.0;
  /// Subtask each interior state is assigned to.
  std::vector<std::size_t> assignment;
  std::vector<std::size_t> cluster_sizes;
  /// confusion[t][label] = number of states of `label` assigned to subtask t.
  std::vector<std::vector<std::size_t>> confusion;
};

/// Assigns each state to argmax_t d_t(s) over L1-normalized columns (lowest
/// index on ties) and scores the majority label of each cluster.
PurityReport assignment_purity(const Matrix& D, std::span<const int> labels);
PurityReport assignment_purity(const Factorization& f, std::span<const int> labels);

/// Majority label of each cluster (lowest label on ties; -1 for empty clusters).
std::vector<int> majority_labels(const PurityReport& report);

/// Circular standard deviation sqrt(-2 ln R) of a distribution over n equally
/// spaced ring positions, in radians.
double circular_spread(const Vector& p);

}  // namespace subtask_forge
