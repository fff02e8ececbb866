#pragma once

#include <vector>

#include "subtask_forge/factorize.hpp"
#include "subtask_forge/lmdp.hpp"
#include "subtask_forge/multitask.hpp"

namespace subtask_forge {

/// One layer of a stacked MLMDP: the base Lmdp augmented with k subtask
/// states reached through P_t = alpha * D^T (D with L1-normalized columns).
struct SubtaskLayer {
  std::size_t level = 1;
  Lmdp base;
  Factorization factorization;
  double alpha = 0.0;
  double alpha_max = 0.0;
  /// k x n_interior, entry (t, s) = alpha * d_t(s).
  SparseMatrix subtask;
  /// Base dynamics with every column s scaled by 1 - sum_t P_t(t, s).
  PassiveDynamics augmented;
};

/// Largest admissible alpha (exclusive): 1 / max_s sum_t d_t(s) over the
/// L1-normalized columns of D.
double alpha_max(const Factorization& factorization);

/// Throws RangeError (naming alpha_max) unless 0 <= alpha < alpha_max.
SubtaskLayer augment_with_subtasks(const Lmdp& lmdp, const Factorization& factorization,
                                   double alpha, std::size_t level = 1);

/// Drops the subtask rows and undoes the column rescaling. Bit-exact for
/// alpha = 0.
Lmdp strip_subtasks(const SubtaskLayer& layer);

/// Higher-layer Lmdp: interior states are the layer's subtasks, boundary
/// states are the base boundary states. Subtask t starts from d_t over base
/// interior states; its transitions are the absorption probabilities into
/// subtask and boundary states under the augmented dynamics, computed with
/// the fundamental matrix (I - P~_ii)^-1. Rewards are the d_t-weighted base
/// rewards; lambda is inherited.
Lmdp derive_higher_layer(const SubtaskLayer& layer);

struct HierarchyOptions {
  double beta = 1.0;
  NmfOptions nmf;
  double q_floor = 1e-12;
  /// When set, alpha_schedule entries are fractions of each layer's alpha_max.
  bool alpha_relative = false;
};

struct HierarchicalMlmdp {
  std::vector<SubtaskLayer> layers;
  Lmdp top;
  std::vector<std::size_t> k_schedule;
  std::vector<double> alpha_schedule;
  /// NMF seed used at each level.
  std::vector<std::uint64_t> seeds;
};

/// Per level: uniform task basis, solve Z, factorize at k_schedule[l], augment
/// with alpha_schedule[l], derive the next layer. Errors carry the level.
HierarchicalMlmdp build_hierarchy(const Lmdp& lmdp, const std::vector<std::size_t>& k_schedule,
                                  const std::vector<double>& alpha_schedule,
                                  const HierarchyOptions& opts = {});

/// Distribution of each level-`level` subtask over base interior states:
/// the product of the normalized D matrices of levels 1..level.
Matrix project_to_base(const HierarchicalMlmdp& hierarchy, std::size_t level);

}  // namespace subtask_forge
