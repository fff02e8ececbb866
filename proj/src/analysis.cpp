#include "subtask_forge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace subtask_forge {

namespace {

Matrix l1_columns(const Matrix& D) {
  Matrix out = D;
  for (Index t = 0; t < out.cols(); ++t) {
    const double s = out.col(t).sum();
    if (s > 0.0) out.col(t) /= s;
  }
  return out;
}

}  // namespace

std::vector<std::size_t> optimal_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw InvalidInput("assignment cost matrix must be square");
  const auto n = static_cast<std::size_t>(cost.rows());
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Potentials formulation with 1-based sentinel row/column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Index>(i0 - 1), static_cast<Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double subtask_distance(const Factorization& a, const Factorization& b, CompareMode mode) {
  if (a.D.rows() != b.D.rows() || a.D.cols() != b.D.cols()) {
    throw InvalidInput("subtask_distance: factorizations have different shapes");
  }
  if (mode == CompareMode::reconstruction) {
    if (a.W.cols() != b.W.cols()) throw InvalidInput("subtask_distance: task counts differ");
    return (a.D * a.W - b.D * b.W).squaredNorm();
  }
  const Matrix da = l1_columns(a.D);
  const Matrix db = l1_columns(b.D);
  const Index k = da.cols();
  Matrix cost(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) cost(i, j) = (da.col(i) - db.col(j)).squaredNorm();
  }
  const auto match = optimal_assignment(cost);
  double total = 0.0;
  for (Index i = 0; i < k; ++i) total += cost(i, static_cast<Index>(match[static_cast<std::size_t>(i)]));
  return total;
}

bool equivalent(const Factorization& a, const Factorization& b, double epsilon, CompareMode mode) {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  return subtask_distance(a, b, mode) < epsilon;
}

Vector boundary_score(const Factorization& f, const Lmdp& lmdp) {
  const auto n = static_cast<Index>(lmdp.n_interior());
  if (static_cast<std::size_t>(f.W.cols()) != lmdp.n_boundary()) {
    throw InvalidInput("boundary_score needs one task per boundary state (got " +
                       std::to_string(f.W.cols()) + " tasks, " +
                       std::to_string(lmdp.n_boundary()) + " boundary states)");
  }
  if (f.D.rows() != n) throw InvalidInput("boundary_score: D does not match n_interior");
  Matrix D = f.D;
  Matrix W = f.W;
  normalize_columns(D, W);
  std::vector<Index> twin(static_cast<std::size_t>(n), -1);
  for (Index s = 0; s < n; ++s) {
    double best = 0.0;
    for (SparseMatrix::InnerIterator it(lmdp.dynamics.boundary, s); it; ++it) {
      if (it.value() > best) {
        best = it.value();
        twin[static_cast<std::size_t>(s)] = it.row();
      }
    }
    if (twin[static_cast<std::size_t>(s)] < 0) {
      throw InvalidInput("interior state " + std::to_string(s) + " has no boundary exit");
    }
  }
  Vector g = Vector::Zero(n);
  for (Index s = 0; s < n; ++s) {
    const auto ws = W.col(twin[static_cast<std::size_t>(s)]);
    for (SparseMatrix::InnerIterator it(lmdp.dynamics.interior, s); it; ++it) {
      g[s] += it.value() * (W.col(twin[static_cast<std::size_t>(it.row())]) - ws).squaredNorm();
    }
  }
  return g;
}

PurityReport assignment_purity(const Matrix& D, std::span<const int> labels) {
  if (static_cast<std::size_t>(D.rows()) != labels.size()) {
    throw InvalidInput("labels must cover every state (" + std::to_string(labels.size()) +
                       " labels, " + std::to_string(D.rows()) + " states)");
  }
  int n_labels = 0;
  for (int l : labels) {
    if (l < 0) throw InvalidInput("labels must be nonnegative");
    n_labels = std::max(n_labels, l + 1);
  }
  const Matrix Dn = l1_columns(D);
  const auto k = static_cast<std::size_t>(Dn.cols());
  PurityReport r;
  r.cluster_sizes.assign(k, 0);
  r.confusion.assign(k, std::vector<std::size_t>(static_cast<std::size_t>(n_labels), 0));
  for (Index s = 0; s < Dn.rows(); ++s) {
    Index best = 0;
    for (Index t = 1; t < Dn.cols(); ++t) {
      if (Dn(s, t) > Dn(s, best)) best = t;
    }
    const auto t = static_cast<std::size_t>(best);
    r.assignment.push_back(t);
    ++r.cluster_sizes[t];
    ++r.confusion[t][static_cast<std::size_t>(labels[static_cast<std::size_t>(s)])];
  }
  std::size_t majority = 0;
  for (const auto& row : r.confusion) {
    if (!row.empty()) majority += *std::max_element(row.begin(), row.end());
  }
  r.purity = labels.empty() ? 0.0 : static_cast<double>(majority) / static_cast<double>(labels.size());
  return r;
}

PurityReport assignment_purity(const Factorization& f, std::span<const int> labels) {
  return assignment_purity(f.D, labels);
}

std::vector<int> majority_labels(const PurityReport& report) {
  std::vector<int> out;
  for (std::size_t t = 0; t < report.confusion.size(); ++t) {
    const auto& row = report.confusion[t];
    if (report.cluster_sizes[t] == 0) {
      out.push_back(-1);
      continue;
    }
    out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

double circular_spread(const Vector& p) {
  const double total = p.sum();
  if (!(total > 0.0)) throw InvalidInput("circular_spread needs positive total mass");
  std::complex<double> m{0.0, 0.0};
  const auto n = static_cast<double>(p.size());
  for (Index i = 0; i < p.size(); ++i) {
    m += p[i] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) / n);
  }
  const double r = std::min(1.0, std::abs(m) / total);
  return r > 0.0 ? std::sqrt(-2.0 * std::log(r)) : std::numeric_limits<double>::infinity();
}

}  // namespace subtask_forge
