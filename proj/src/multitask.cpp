#include "subtask_forge/multitask.hpp"

#include <cmath>
#include <limits>

#include <Eigen/QR>

namespace subtask_forge {

TaskBasis build_uniform_task_basis(const Lmdp& lmdp) {
  const auto nb = static_cast<Index>(lmdp.n_boundary());
  TaskBasis basis;
  basis.Q = Matrix::Identity(nb, nb);
  basis.labels.reserve(lmdp.n_boundary());
  for (Index b = 0; b < nb; ++b) {
    const auto at = static_cast<std::size_t>(lmdp.space.n_interior + static_cast<std::size_t>(b));
    basis.labels.push_back(lmdp.space.labels.size() > at ? "goal:" + lmdp.space.labels[at]
                                                         : "goal:" + std::to_string(b));
  }
  return basis;
}

DesirabilityBasis solve_task_basis(const Lmdp& lmdp, const TaskBasis& basis, double q_floor) {
  if (static_cast<std::size_t>(basis.Q.rows()) != lmdp.n_boundary()) {
    throw InvalidInput("task basis has " + std::to_string(basis.Q.rows()) +
                       " rows, expected n_boundary = " + std::to_string(lmdp.n_boundary()));
  }
  if (!(q_floor > 0.0)) throw InvalidInput("q_floor must be positive");
  for (Index t = 0; t < basis.Q.cols(); ++t) {
    const auto col = basis.Q.col(t);
    if ((col.array() < 0.0).any() || !(col.maxCoeff() > 0.0)) {
      throw InvalidInput("task " + std::to_string(t) +
                         " must be nonnegative with at least one positive entry");
    }
  }
  DesirabilityBasis out;
  out.q_floor = q_floor;
  const Matrix floored = basis.Q.cwiseMax(q_floor);
  try {
    out.Z = solve_finite_exit(lmdp, floored);
  } catch (const NumericalError& e) {
    throw SingularSystemError(std::string("solving task basis: ") + e.what());
  }
  return out;
}

Vector nnls(const Matrix& A, const Vector& b, std::size_t max_iter) {
  const Index n = A.cols();
  if (A.rows() != b.size()) throw InvalidInput("nnls: dimension mismatch");
  if (max_iter == 0) max_iter = static_cast<std::size_t>(3 * n + 10);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     A.cwiseAbs().colwise().sum().maxCoeff() *
                     static_cast<double>(std::max(A.rows(), n));
  Vector x = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);

  auto solve_passive = [&]() {
    std::vector<Index> idx;
    for (Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Matrix sub(A.rows(), static_cast<Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Index>(c)) = A.col(idx[c]);
    const Vector s_sub = sub.colPivHouseholderQr().solve(b);
    Vector s = Vector::Zero(n);
    for (std::size_t c = 0; c < idx.size(); ++c) s[idx[c]] = s_sub[static_cast<Index>(c)];
    return s;
  };

  for (std::size_t outer = 0; outer < max_iter; ++outer) {
    const Vector grad = A.transpose() * (b - A * x);
    Index best = -1;
    double best_val = tol;
    for (Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && grad[j] > best_val) {
        best_val = grad[j];
        best = j;
      }
    }
    if (best < 0) return x;
    passive[static_cast<std::size_t>(best)] = true;
    for (std::size_t inner = 0; inner <= static_cast<std::size_t>(n); ++inner) {
      const Vector s = solve_passive();
      double step = 1.0;
      bool feasible = true;
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          feasible = false;
          step = std::min(step, x[j] / (x[j] - s[j]));
        }
      }
      if (feasible) {
        x = s;
        break;
      }
      x += step * (s - x);
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
      }
    }
  }
  throw ConvergenceError("nnls did not converge in " + std::to_string(max_iter) + " iterations");
}

Composition compose(const TaskBasis& basis, const DesirabilityBasis& desirability, const Vector& q) {
  if (q.size() != basis.Q.rows()) {
    throw InvalidInput("q has length " + std::to_string(q.size()) + ", expected " +
                       std::to_string(basis.Q.rows()));
  }
  if (desirability.Z.cols() != basis.Q.cols()) {
    throw InvalidInput("Q and Z have different task counts");
  }
  if ((q.array() < 0.0).any()) throw DomainError("q must be nonnegative");
  Composition c;
  c.w = nnls(basis.Q, q);
  c.z = desirability.Z * c.w;
  c.residual = (basis.Q * c.w - q).norm();
  return c;
}

}  // namespace subtask_forge
