#include "subtask_forge/hierarchy.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SparseLU>

namespace subtask_forge {

namespace {

Matrix normalized_d(const Factorization& f) {
  Matrix D = f.D;
  for (Index t = 0; t < D.cols(); ++t) {
    const double s = D.col(t).sum();
    if (!(s > 0.0)) throw InvalidInput("factorization has an all-zero D column");
    D.col(t) /= s;
  }
  return D;
}

SparseMatrix to_sparse(const Matrix& m) {
  SparseMatrix s = m.sparseView(1.0, 0.0);
  s.makeCompressed();
  return s;
}

std::uint64_t level_seed(std::uint64_t seed, std::size_t level) {
  // splitmix64 of (seed, level)
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(level);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <class Fn>
auto at_level(std::size_t level, Fn&& fn) {
  const std::string where = "level " + std::to_string(level) + ": ";
  try {
    return fn();
  } catch (const RangeError& e) {
    throw RangeError(where + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(where + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(where + e.what());
  } catch (const SingularSystemError& e) {
    throw SingularSystemError(where + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + e.what());
  }
}

}  // namespace

double alpha_max(const Factorization& factorization) {
  const Matrix D = normalized_d(factorization);
  const double peak = D.rowwise().sum().maxCoeff();
  return 1.0 / peak;
}

SubtaskLayer augment_with_subtasks(const Lmdp& lmdp, const Factorization& factorization,
                                   double alpha, std::size_t level) {
  if (static_cast<std::size_t>(factorization.D.rows()) != lmdp.n_interior()) {
    throw InvalidInput("factorization D has " + std::to_string(factorization.D.rows()) +
                       " rows, expected n_interior = " + std::to_string(lmdp.n_interior()));
  }
  const double amax = alpha_max(factorization);
  if (!(alpha >= 0.0) || !(alpha < amax)) {
    std::ostringstream os;
    os.precision(17);
    os << "alpha = " << alpha << " is outside [0, alpha_max = " << amax << ")";
    throw RangeError(os.str());
  }
  const Matrix D = normalized_d(factorization);
  SubtaskLayer layer;
  layer.level = level;
  layer.base = lmdp;
  layer.factorization = factorization;
  layer.alpha = alpha;
  layer.alpha_max = amax;
  const Matrix pt = alpha * D.transpose();
  layer.subtask = to_sparse(pt);
  const Vector keep = (Vector::Ones(pt.cols()) - pt.colwise().sum().transpose());
  layer.augmented.interior = lmdp.dynamics.interior * keep.asDiagonal();
  layer.augmented.boundary = lmdp.dynamics.boundary * keep.asDiagonal();
  layer.augmented.interior.makeCompressed();
  layer.augmented.boundary.makeCompressed();
  return layer;
}

Lmdp strip_subtasks(const SubtaskLayer& layer) {
  const Vector keep =
      Vector::Ones(layer.subtask.cols()) -
      (Eigen::RowVectorXd::Ones(layer.subtask.rows()) * layer.subtask).transpose();
  const Vector inv = keep.cwiseInverse();
  Lmdp out = layer.base;
  out.dynamics.interior = layer.augmented.interior * inv.asDiagonal();
  out.dynamics.boundary = layer.augmented.boundary * inv.asDiagonal();
  out.dynamics.interior.makeCompressed();
  out.dynamics.boundary.makeCompressed();
  return out;
}

Lmdp derive_higher_layer(const SubtaskLayer& layer) {
  if (!(layer.alpha > 0.0)) {
    throw InvalidInput("derive_higher_layer requires alpha > 0");
  }
  const Lmdp& base = layer.base;
  const auto n = static_cast<Index>(base.n_interior());
  const Matrix D = normalized_d(layer.factorization);
  const auto k = D.cols();

  SparseMatrix system(n, n);
  system.setIdentity();
  system -= layer.augmented.interior;
  system.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu(system);
  if (lu.info() != Eigen::Success) {
    throw SingularSystemError("fundamental matrix I - P~_ii is singular");
  }
  // Expected visits to each interior state before absorption, per start d_t.
  Matrix visits(n, k);
  for (Index t = 0; t < k; ++t) visits.col(t) = lu.solve(Vector(D.col(t)));
  if (!visits.allFinite()) throw SingularSystemError("fundamental matrix solve is not finite");

  const Matrix to_subtask = layer.subtask * visits;
  const Matrix to_boundary = layer.augmented.boundary * visits;

  Lmdp up;
  up.space.n_interior = static_cast<std::size_t>(k);
  up.space.n_boundary = base.n_boundary();
  const std::string prefix = "L" + std::to_string(layer.level + 1) + ":t";
  for (Index t = 0; t < k; ++t) up.space.labels.push_back(prefix + std::to_string(t));
  if (base.space.labels.size() == base.space.size()) {
    up.space.labels.insert(up.space.labels.end(),
                           base.space.labels.begin() + static_cast<std::ptrdiff_t>(n),
                           base.space.labels.end());
  } else {
    for (std::size_t b = 0; b < base.n_boundary(); ++b) {
      up.space.labels.push_back("b" + std::to_string(b));
    }
  }
  up.dynamics.interior = to_sparse(to_subtask.cwiseMax(0.0));
  up.dynamics.boundary = to_sparse(to_boundary.cwiseMax(0.0));
  up.r_interior = D.transpose() * base.r_interior;
  up.lambda = base.lambda;
  return up;
}

HierarchicalMlmdp build_hierarchy(const Lmdp& lmdp, const std::vector<std::size_t>& k_schedule,
                                  const std::vector<double>& alpha_schedule,
                                  const HierarchyOptions& opts) {
  if (k_schedule.empty() || k_schedule.size() != alpha_schedule.size()) {
    throw InvalidInput("k and alpha schedules must be non-empty and of equal length");
  }
  HierarchicalMlmdp h;
  h.k_schedule = k_schedule;
  Lmdp current = lmdp;
  for (std::size_t i = 0; i < k_schedule.size(); ++i) {
    const std::size_t level = i + 1;
    at_level(level, [&] {
      const TaskBasis basis = build_uniform_task_basis(current);
      const DesirabilityBasis z = solve_task_basis(current, basis, opts.q_floor);
      NmfOptions nopts = opts.nmf;
      nopts.seed = level_seed(opts.nmf.seed, level);
      Factorization f = nmf(z.Z, k_schedule[i], opts.beta, nopts);
      const double alpha = opts.alpha_relative ? alpha_schedule[i] * alpha_max(f) : alpha_schedule[i];
      SubtaskLayer layer = augment_with_subtasks(current, f, alpha, level);
      current = derive_higher_layer(layer);
      h.seeds.push_back(nopts.seed);
      h.alpha_schedule.push_back(alpha);
      h.layers.push_back(std::move(layer));
      return 0;
    });
  }
  h.top = std::move(current);
  return h;
}

Matrix project_to_base(const HierarchicalMlmdp& hierarchy, std::size_t level) {
  if (level < 1 || level > hierarchy.layers.size()) {
    throw RangeError("level " + std::to_string(level) + " is outside [1, " +
                     std::to_string(hierarchy.layers.size()) + "]");
  }
  Matrix p = normalized_d(hierarchy.layers[0].factorization);
  for (std::size_t l = 1; l < level; ++l) p = p * normalized_d(hierarchy.layers[l].factorization);
  return p;
}

}  // namespace subtask_forge
