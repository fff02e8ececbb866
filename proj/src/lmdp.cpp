#include "subtask_forge/lmdp.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include <Eigen/SparseLU>

#include "subtask_forge/parallel.hpp"

namespace subtask_forge {

namespace {

std::string fmt_g(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void check_q(const Lmdp& lmdp, const Vector& q_b) {
  if (static_cast<std::size_t>(q_b.size()) != lmdp.n_boundary()) {
    throw InvalidInput("q_b has length " + std::to_string(q_b.size()) +
                       ", expected " + std::to_string(lmdp.n_boundary()));
  }
  for (Index b = 0; b < q_b.size(); ++b) {
    if (!(q_b[b] > 0.0) || !std::isfinite(q_b[b])) {
      throw DomainError("q_b[" + std::to_string(b) +
                        "] must be positive and finite, got " + fmt_g(q_b[b]));
    }
  }
}

// Factorizes I - G P_ii^T once and checks contractivity: for nonnegative M,
// (I - M) x = 1 has a positive solution iff rho(M) < 1.
class FiniteExitSolver {
 public:
  explicit FiniteExitSolver(const Lmdp& lmdp) : gain_(lmdp.interior_gain()) {
    const auto n = static_cast<Index>(lmdp.n_interior());
    SparseMatrix system(n, n);
    system.setIdentity();
    SparseMatrix weighted = gain_.asDiagonal() * SparseMatrix(lmdp.dynamics.interior.transpose());
    system -= weighted;
    system.makeCompressed();
    lu_.compute(system);
    if (lu_.info() != Eigen::Success) {
      throw SingularSystemError(
          "interior system I - G P_ii^T is singular (boundary unreachable from "
          "some interior state?)");
    }
    Vector probe = lu_.solve(Vector::Ones(n));
    for (Index i = 0; i < n; ++i) {
      if (!std::isfinite(probe[i]) || !(probe[i] > 0.0)) {
        throw SingularSystemError(
            "interior dynamics are not contractive (spectral radius of G P_ii "
            ">= 1 at state " + std::to_string(i) + ")");
      }
    }
    boundary_t_ = SparseMatrix(lmdp.dynamics.boundary.transpose());
  }

  Vector solve(const Vector& q_b) const {
    Vector rhs = gain_.cwiseProduct(boundary_t_ * q_b);
    Vector z = lu_.solve(rhs);
    for (Index i = 0; i < z.size(); ++i) {
      if (!std::isfinite(z[i]) || !(z[i] > 0.0)) {
        throw SingularSystemError("solve produced non-positive desirability at state " +
                                  std::to_string(i));
      }
    }
    return z;
  }

 private:
  Vector gain_;
  SparseMatrix boundary_t_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace

Vector Lmdp::interior_gain() const { return (r_interior / lambda).array().exp().matrix(); }

Diagnostics validate_lmdp(const Lmdp& lmdp, double stochastic_tol) {
  Diagnostics d;
  auto fail = [&d](std::string msg) {
    d.pass = false;
    d.violations.push_back(std::move(msg));
  };
  const auto ni = static_cast<Index>(lmdp.space.n_interior);
  const auto nb = static_cast<Index>(lmdp.space.n_boundary);
  if (ni < 1) fail("n_interior must be at least 1");
  if (nb < 1) fail("n_boundary must be at least 1");
  if (!lmdp.space.labels.empty()) {
    if (lmdp.space.labels.size() != lmdp.space.size()) {
      fail("labels has length " + std::to_string(lmdp.space.labels.size()) + ", expected " +
           std::to_string(lmdp.space.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& l : lmdp.space.labels) {
      if (!seen.insert(l).second) fail("duplicate label \"" + l + "\"");
    }
  }
  if (!(lmdp.lambda > 0.0) || !std::isfinite(lmdp.lambda)) fail("lambda must be positive");
  if (lmdp.r_interior.size() != ni) {
    fail("r_interior has length " + std::to_string(lmdp.r_interior.size()) + ", expected " +
         std::to_string(ni));
  } else if (!lmdp.r_interior.allFinite()) {
    fail("r_interior has non-finite entries");
  }
  const auto& pii = lmdp.dynamics.interior;
  const auto& pbi = lmdp.dynamics.boundary;
  bool shapes_ok = true;
  if (pii.rows() != ni || pii.cols() != ni) {
    fail("P_ii is " + std::to_string(pii.rows()) + "x" + std::to_string(pii.cols()) +
         ", expected " + std::to_string(ni) + "x" + std::to_string(ni));
    shapes_ok = false;
  }
  if (pbi.rows() != nb || pbi.cols() != ni) {
    fail("P_bi is " + std::to_string(pbi.rows()) + "x" + std::to_string(pbi.cols()) +
         ", expected " + std::to_string(nb) + "x" + std::to_string(ni));
    shapes_ok = false;
  }
  if (!shapes_ok) return d;

  auto check_entries = [&](const SparseMatrix& m, const char* name) {
    for (Index c = 0; c < m.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
        if (!(it.value() >= 0.0 && it.value() <= 1.0)) {
          fail(std::string(name) + "(" + std::to_string(it.row()) + "," +
               std::to_string(it.col()) + ") = " + fmt_g(it.value()) + " is outside [0,1]");
        }
      }
    }
  };
  check_entries(pii, "P_ii");
  check_entries(pbi, "P_bi");
  for (Index s = 0; s < ni; ++s) {
    const double sum = pii.col(s).sum() + pbi.col(s).sum();
    if (!(std::abs(sum - 1.0) <= stochastic_tol)) {
      fail("column " + std::to_string(s) + " sums to " + fmt_g(sum));
    }
  }
  return d;
}

Vector solve_finite_exit(const Lmdp& lmdp, const Vector& q_b) {
  check_q(lmdp, q_b);
  return FiniteExitSolver(lmdp).solve(q_b);
}

Matrix solve_finite_exit(const Lmdp& lmdp, const Matrix& q_b) {
  if (static_cast<std::size_t>(q_b.rows()) != lmdp.n_boundary()) {
    throw InvalidInput("Q has " + std::to_string(q_b.rows()) + " rows, expected " +
                       std::to_string(lmdp.n_boundary()));
  }
  for (Index t = 0; t < q_b.cols(); ++t) {
    bool any_positive = false;
    for (Index b = 0; b < q_b.rows(); ++b) {
      const double v = q_b(b, t);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw DomainError("q_b(" + std::to_string(b) + ", " + std::to_string(t) +
                          ") must be nonnegative and finite, got " + fmt_g(v));
      }
      any_positive |= v > 0.0;
    }
    if (!any_positive) throw DomainError("column " + std::to_string(t) + " of q_b has no positive entry");
  }
  const FiniteExitSolver solver(lmdp);
  Matrix z(static_cast<Index>(lmdp.n_interior()), q_b.cols());
  // Each column is solved on its own so results do not depend on batching.
  parallel_for(static_cast<std::size_t>(q_b.cols()), [&](std::size_t t) {
    const auto c = static_cast<Index>(t);
    z.col(c) = solver.solve(q_b.col(c));
  });
  return z;
}

Vector solve_iterative(const Lmdp& lmdp, const Vector& q_b, double tol, std::size_t max_iter) {
  check_q(lmdp, q_b);
  if (!(tol > 0.0)) throw InvalidInput("tol must be positive");
  const Vector gain = lmdp.interior_gain();
  const SparseMatrix pii_t = lmdp.dynamics.interior.transpose();
  const Vector exit = gain.cwiseProduct(SparseMatrix(lmdp.dynamics.boundary.transpose()) * q_b);
  Vector z = Vector::Ones(static_cast<Index>(lmdp.n_interior()));
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector next = gain.cwiseProduct(pii_t * z) + exit;
    const double change = (next - z).lpNorm<Eigen::Infinity>();
    z = std::move(next);
    if (change < tol) return z;
  }
  throw ConvergenceError("fixed-point iteration did not converge in " +
                         std::to_string(max_iter) + " iterations");
}

double bellman_residual(const Lmdp& lmdp, const Vector& z, const Vector& q_b) {
  const Vector gain = lmdp.interior_gain();
  const Vector rhs = gain.cwiseProduct(SparseMatrix(lmdp.dynamics.interior.transpose()) * z +
                                       SparseMatrix(lmdp.dynamics.boundary.transpose()) * q_b);
  return (rhs - z).lpNorm<Eigen::Infinity>();
}

Vector value_from_desirability(const Vector& z, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  for (Index i = 0; i < z.size(); ++i) {
    if (!(z[i] > 0.0)) {
      throw DomainError("z[" + std::to_string(i) + "] = " + fmt_g(z[i]) + " is not positive");
    }
  }
  return lambda * z.array().log().matrix();
}

PassiveDynamics optimal_policy(const Lmdp& lmdp, const Vector& z, const Vector& q_b) {
  if (static_cast<std::size_t>(z.size()) != lmdp.n_interior() ||
      static_cast<std::size_t>(q_b.size()) != lmdp.n_boundary()) {
    throw InvalidInput("z or q_b has the wrong length");
  }
  PassiveDynamics out{lmdp.dynamics.interior, lmdp.dynamics.boundary};
  const auto n = static_cast<Index>(lmdp.n_interior());
  for (Index s = 0; s < n; ++s) {
    double norm = 0.0;
    for (SparseMatrix::InnerIterator it(out.interior, s); it; ++it) {
      it.valueRef() *= z[it.row()];
      norm += it.value();
    }
    for (SparseMatrix::InnerIterator it(out.boundary, s); it; ++it) {
      it.valueRef() *= q_b[it.row()];
      norm += it.value();
    }
    if (!(norm > 0.0)) {
      throw NumericalError("degenerate normalizer for interior state " + std::to_string(s));
    }
    for (SparseMatrix::InnerIterator it(out.interior, s); it; ++it) it.valueRef() /= norm;
    for (SparseMatrix::InnerIterator it(out.boundary, s); it; ++it) it.valueRef() /= norm;
  }
  return out;
}

}  // namespace subtask_forge
