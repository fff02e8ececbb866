#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "generators.hpp"
#include "subtask_forge/domains.hpp"
#include "subtask_forge/factorize.hpp"
#include "subtask_forge/multitask.hpp"

using namespace subtask_forge;

namespace {

// Elementwise definition, summed in the obvious order.
double reference_divergence(const Matrix& A, const Matrix& B, double beta) {
  double s = 0.0;
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index i = 0; i < A.rows(); ++i) {
      const double a = A(i, j);
      const double b = B(i, j);
      if (beta == 2.0) {
        s += 0.5 * (a - b) * (a - b);
      } else if (beta == 1.0) {
        s += (a > 0 ? a * std::log(a / b) : 0.0) - a + b;
      } else if (beta == 0.0) {
        s += a / b - std::log(a / b) - 1.0;
      } else {
        s += (std::pow(a, beta) + (beta - 1) * std::pow(b, beta) - beta * a * std::pow(b, beta - 1)) /
             (beta * (beta - 1));
      }
    }
  }
  return s;
}

bool non_increasing(const std::vector<double>& trace, double slack = 1e-12) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1] * (1.0 + slack) + 1e-300) return false;
  }
  return true;
}

Matrix small_rooms_z() {
  const Domain d = build_rooms({2, 2, 3});
  return solve_task_basis(d.lmdp, build_uniform_task_basis(d.lmdp)).Z;
}

}  // namespace

TEST_CASE("beta divergence examples") {
  gen::Rng rng(2);
  const Matrix A = gen::positive_matrix(rng, 4, 3);
  for (double beta : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) CHECK(beta_divergence(A, A, beta) == 0.0);
  CHECK(beta_divergence(Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1), 2.0) == doctest::Approx(2.0));
  CHECK(beta_divergence(Matrix::Constant(1, 1, std::exp(1.0)), Matrix::Ones(1, 1), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("property: beta divergence matches the elementwise definition") {
  gen::Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix A = gen::positive_matrix(rng, gen::integer(rng, 1, 6), gen::integer(rng, 1, 6), 0.01, 3.0);
    const Matrix B = gen::positive_matrix(rng, A.rows(), A.cols(), 0.01, 3.0);
    const double beta = trial % 3 == 0 ? static_cast<double>(trial % 4) : gen::uniform(rng, -1.0, 3.5);
    const double d = beta_divergence(A, B, beta);
    CHECK(d >= 0.0);
    CHECK(d == doctest::Approx(reference_divergence(A, B, beta)).epsilon(1e-10));
  }
}

TEST_CASE("beta divergence domain checks") {
  const Matrix one = Matrix::Ones(1, 1);
  const Matrix zero = Matrix::Zero(1, 1);
  CHECK_THROWS_AS(beta_divergence(one, zero, 1.0), DomainError);
  CHECK_THROWS_AS(beta_divergence(zero, one, 0.0), DomainError);
  CHECK_THROWS_AS(beta_divergence(-one, one, 2.0), DomainError);
  CHECK_THROWS_AS(beta_divergence(one, Matrix::Ones(2, 1), 2.0), InvalidInput);
  CHECK(beta_divergence(zero, one, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("rank-one matrix is recovered exactly") {
  gen::Rng rng(31);
  const Vector u = gen::positive_vector(rng, 20, 0.5, 2.0);
  const Vector v = gen::positive_vector(rng, 15, 0.5, 2.0);
  const Matrix Z = u * v.transpose();
  NmfOptions opts;
  opts.restarts = 3;
  const Factorization f = nmf(Z, 1, 1.0, opts);
  CHECK(f.divergence / Z.norm() <= 1e-8);
  CHECK((f.D.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(f.D.minCoeff() >= 0.0);
  CHECK(f.W.minCoeff() >= 0.0);
}

TEST_CASE("synthetic rank-four matrix is recovered") {
  gen::Rng rng(41);
  const Matrix D0 = gen::positive_matrix(rng, 40, 4, 0.0, 1.0);
  const Matrix W0 = gen::positive_matrix(rng, 4, 30, 0.0, 1.0);
  const Matrix Z = D0 * W0;
  NmfOptions opts;
  opts.restarts = 4;
  opts.max_iter = 20000;
  opts.tol = 1e-13;
  CHECK(nmf(Z, 4, 1.0, opts).normalized_divergence <= 1e-6);
}

TEST_CASE("property: monotone descent and nonnegativity") {
  gen::Rng rng(51);
  for (int trial = 0; trial < 12; ++trial) {
    const Matrix Z = gen::positive_matrix(rng, gen::integer(rng, 3, 20), gen::integer(rng, 3, 20), 0.01, 2.0);
    const double beta = std::array<double, 6>{0.0, 0.5, 1.0, 1.5, 2.0, 3.0}[static_cast<std::size_t>(trial % 6)];
    NmfOptions opts{300, 0.0, 2, static_cast<std::uint64_t>(trial)};
    const Factorization f = nmf(Z, static_cast<std::size_t>(gen::integer(rng, 1, 3)), beta, opts);
    CHECK(f.divergence_trace.size() == f.iterations + 1);
    CHECK(non_increasing(f.divergence_trace));
    CHECK(f.D.minCoeff() >= 0.0);
    CHECK(f.W.minCoeff() >= 0.0);
    CHECK(f.divergence == doctest::Approx(f.divergence_trace.back()).epsilon(1e-12));
  }
}

TEST_CASE("property: column rescaling leaves DW and the objective unchanged") {
  gen::Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix Z = gen::positive_matrix(rng, 8, 7);
    Matrix D = gen::positive_matrix(rng, 8, 3);
    Matrix W = gen::positive_matrix(rng, 3, 7);
    const Matrix before = D * W;
    normalize_columns(D, W);
    CHECK(((D * W) - before).cwiseAbs().maxCoeff() <= 1e-12 * before.cwiseAbs().maxCoeff());
    CHECK((D.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
    for (double beta : {0.0, 1.0, 2.0}) {
      CHECK(beta_divergence(Z, D * W, beta) == doctest::Approx(beta_divergence(Z, before, beta)).epsilon(1e-12));
    }
  }
}

TEST_CASE("determinism across thread counts") {
  const Matrix Z = small_rooms_z();
  NmfOptions opts{500, 1e-9, 4, 77};
  ::setenv("SUBTASK_FORGE_THREADS", "1", 1);
  const Factorization a = nmf(Z, 4, 1.0, opts);
  ::setenv("SUBTASK_FORGE_THREADS", "3", 1);
  const Factorization b = nmf(Z, 4, 1.0, opts);
  ::unsetenv("SUBTASK_FORGE_THREADS");
  CHECK(a.D == b.D);
  CHECK(a.W == b.W);
  CHECK(a.divergence_trace == b.divergence_trace);
  CHECK(a.best_restart == b.best_restart);
  opts.seed = 78;
  CHECK_FALSE(nmf(Z, 4, 1.0, opts).D == a.D);
}

TEST_CASE("refactoring: best k+1 beats best k plus one column") {
  const Matrix Z = small_rooms_z();
  NmfOptions opts{3000, 1e-11, 6, 5};
  for (std::size_t k : {2u, 3u}) {
    const Factorization fk = nmf(Z, k, 1.0, opts);
    const Factorization fk1 = nmf(Z, k + 1, 1.0, opts);
    // Append one free column to the fixed best-k D and optimize it with W.
    gen::Rng rng(k);
    double best_appended = std::numeric_limits<double>::infinity();
    std::vector<bool> mask(k + 1, false);
    mask[k] = true;
    for (int restart = 0; restart < 6; ++restart) {
      Matrix D(Z.rows(), static_cast<Index>(k + 1));
      D.leftCols(static_cast<Index>(k)) = fk.D;
      D.col(static_cast<Index>(k)) = gen::positive_vector(rng, Z.rows(), 0.1, 1.1) / static_cast<double>(Z.rows());
      Matrix W(static_cast<Index>(k + 1), Z.cols());
      W.topRows(static_cast<Index>(k)) = fk.W;
      W.row(static_cast<Index>(k)) = gen::positive_vector(rng, Z.cols(), 0.1, 1.1).transpose() * Z.mean();
      const Factorization g = nmf_from(Z, D, W, 1.0, 3000, 1e-11, mask);
      CHECK(g.D.leftCols(static_cast<Index>(k)) == fk.D);
      best_appended = std::min(best_appended, g.divergence);
    }
    CHECK(fk1.divergence < best_appended);
  }
}

TEST_CASE("k out of range") {
  const Matrix Z = Matrix::Ones(4, 3);
  CHECK_THROWS_AS(nmf(Z, 0, 1.0), RangeError);
  CHECK_THROWS_AS(nmf(Z, 4, 1.0), RangeError);
  CHECK_THROWS_AS(select_k(Z, 1.0, 2), RangeError);
  CHECK_THROWS_AS(nmf(Matrix::Zero(2, 2), 1, 0.5), DomainError);
  NmfOptions none;
  none.restarts = 0;
  CHECK_THROWS_AS(nmf(Z, 1, 1.0, none), InvalidInput);
}

TEST_CASE("elbow on injected curves") {
  const std::vector<double> f{10, 5, 4.9, 4.8};
  CHECK(elbow(f) == 2u);
  CHECK(elbow(f, ElbowRule::first_satisfying) == 2u);
  CHECK_FALSE(elbow(std::vector<double>{1.0, 0.5}).has_value());
  CHECK_FALSE(elbow(std::vector<double>{3.0, 2.0, 1.0}).has_value());
  // Convex curve with a sharp corner at 3: the literal rule fires at 2.
  const std::vector<double> g{1.0, 0.5, 0.01, 0.009, 0.008};
  CHECK(elbow(g) == 3u);
  CHECK(elbow(g, ElbowRule::first_satisfying) == 2u);
  // A restart uptick is clipped away.
  CHECK(elbow(std::vector<double>{1.0, 0.5, 0.02, 0.03, 0.019}) == 3u);
}

TEST_CASE("exact rank three selects three") {
  gen::Rng rng(71);
  const Matrix Z = gen::positive_matrix(rng, 30, 3, 0.0, 1.0) * gen::positive_matrix(rng, 3, 25, 0.0, 1.0);
  NmfOptions opts{4000, 1e-12, 4, 3};
  const KSelection sel = select_k(Z, 1.0, 6, opts);
  CHECK(sel.k_star == 3u);
  CHECK(sel.f.size() == 6);
  CHECK(sel.f[2] < 1e-5);
  for (std::size_t i = 1; i < sel.clipped.size(); ++i) CHECK(sel.clipped[i] <= sel.clipped[i - 1]);
}
