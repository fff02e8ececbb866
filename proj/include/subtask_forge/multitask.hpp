#pragma once

#include <string>
#include <vector>

#include "subtask_forge/lmdp.hpp"

namespace subtask_forge {

/// Column t holds the exponentiated boundary reward q_b^t of task t.
struct TaskBasis {
  Matrix Q;
  std::vector<std::string> labels;

  Index n_tasks() const { return Q.cols(); }
};

/// Column t holds the desirability of task t over interior states.
struct DesirabilityBasis {
  Matrix Z;
  /// Floor applied to zero boundary rewards when solving.
  double q_floor = 1e-12;
};

/// One goal task per boundary state: Q = I.
TaskBasis build_uniform_task_basis(const Lmdp& lmdp);

/// Solves every task column; zero entries of Q are floored at q_floor so the
/// resulting desirabilities stay strictly positive.
DesirabilityBasis solve_task_basis(const Lmdp& lmdp, const TaskBasis& basis,
                                   double q_floor = 1e-12);

struct Composition {
  Vector w;
  Vector z;
  double residual = 0.0;  // ||Q w - q||_2
};

/// Nonnegative least-squares weights for q in the task basis and the blended
/// desirability z = Z w.
Composition compose(const TaskBasis& basis, const DesirabilityBasis& desirability,
                    const Vector& q);

/// argmin_{x >= 0} ||A x - b||_2 via the Lawson-Hanson active-set method.
Vector nnls(const Matrix& A, const Vector& b, std::size_t max_iter = 0);

}  // namespace subtask_forge
