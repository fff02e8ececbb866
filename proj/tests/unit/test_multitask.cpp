#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "generators.hpp"
#include "subtask_forge/domains.hpp"
#include "subtask_forge/multitask.hpp"

using namespace subtask_forge;

namespace {

// Exhaustive NNLS: least squares on every support set, keep the best
// feasible one.
Vector brute_force_nnls(const Matrix& A, const Vector& b) {
  const Index n = A.cols();
  Vector best = Vector::Zero(n);
  double best_r = b.squaredNorm();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<Index> cols;
    for (Index j = 0; j < n; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    Matrix As(A.rows(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) As.col(static_cast<Index>(c)) = A.col(cols[c]);
    const Vector xs = As.colPivHouseholderQr().solve(b);
    if ((xs.array() < 0).any()) continue;
    Vector x = Vector::Zero(n);
    for (std::size_t c = 0; c < cols.size(); ++c) x[cols[c]] = xs[static_cast<Index>(c)];
    const double r = (A * x - b).squaredNorm();
    if (r < best_r - 1e-14) {
      best_r = r;
      best = x;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("uniform task basis is the identity") {
  const Domain d = build_rooms({2, 2, 3});
  const TaskBasis Q = build_uniform_task_basis(d.lmdp);
  CHECK(Q.Q.rows() == 36);
  CHECK(Q.Q.cols() == 36);
  CHECK(Q.Q == Matrix::Identity(36, 36));
  CHECK((Q.Q.colwise().sum().array() == 1.0).all());
  CHECK(build_uniform_task_basis(build_taxi({}).lmdp).n_tasks() == 125);
}

TEST_CASE("single task on the single state") {
  const Lmdp l = gen::single_state();
  const DesirabilityBasis z = solve_task_basis(l, {Matrix::Ones(1, 1), {}});
  CHECK(z.Z(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("identity basis columns match per-task solves") {
  gen::Rng rng(1);
  const Lmdp l = gen::random_lmdp(rng, 12, 4);
  const TaskBasis Q = build_uniform_task_basis(l);
  const DesirabilityBasis Z = solve_task_basis(l, Q);
  for (Index t = 0; t < 4; ++t) {
    Vector q = Vector::Constant(4, Z.q_floor);
    q[t] = 1.0;
    CHECK(gen::rel_max_diff(Z.Z.col(t), solve_finite_exit(l, q)) < 1e-13);
  }
  CHECK((Z.Z.array() > 0).all());
}

TEST_CASE("property: permuting tasks permutes the basis") {
  gen::Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const int nb = gen::integer(rng, 2, 8);
    const Lmdp l = gen::random_lmdp(rng, gen::integer(rng, 3, 25), nb);
    const Matrix Q = gen::positive_matrix(rng, nb, 6);
    std::vector<Index> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix Qp(nb, 6);
    for (Index j = 0; j < 6; ++j) Qp.col(j) = Q.col(perm[static_cast<std::size_t>(j)]);
    const Matrix Z = solve_task_basis(l, {Q, {}}).Z;
    const Matrix Zp = solve_task_basis(l, {Qp, {}}).Z;
    for (Index j = 0; j < 6; ++j) CHECK(Zp.col(j) == Z.col(perm[static_cast<std::size_t>(j)]));
  }
}

TEST_CASE("composition examples") {
  gen::Rng rng(4);
  const Lmdp l = gen::random_lmdp(rng, 15, 5);
  const TaskBasis Q = build_uniform_task_basis(l);
  const DesirabilityBasis Z = solve_task_basis(l, Q);
  SUBCASE("basis member") {
    const Composition c = compose(Q, Z, Q.Q.col(2));
    CHECK((c.w - Vector::Unit(5, 2)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(gen::rel_max_diff(c.z, Z.Z.col(2)) < 1e-14);
  }
  SUBCASE("zero task") {
    const Composition c = compose(Q, Z, Vector::Zero(5));
    CHECK(c.w.cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.z.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("blend of two tasks") {
    const Vector q = 0.3 * Q.Q.col(0) + 0.7 * Q.Q.col(1);
    const Composition c = compose(Q, Z, q);
    CHECK(c.w[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(c.w[1] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(c.w.tail(3).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(gen::rel_max_diff(c.z, Vector(0.3 * Z.Z.col(0) + 0.7 * Z.Z.col(1))) < 1e-8);
    const Vector direct = solve_finite_exit(l, Matrix(q)).col(0);
    CHECK(gen::rel_max_diff(c.z, direct) < 1e-8);
  }
  CHECK_THROWS_AS(compose(Q, Z, Vector::Constant(5, -1.0)), DomainError);
  CHECK_THROWS_AS(compose(Q, Z, Vector::Zero(4)), InvalidInput);
}

TEST_CASE("property: compositionality on random Lmdps") {
  gen::Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int nb = gen::integer(rng, 1, 6);
    const Lmdp l = gen::random_lmdp(rng, gen::integer(rng, 2, 30), nb);
    const Matrix Q = gen::positive_matrix(rng, nb, nb + 2);
    const Matrix Z = solve_task_basis(l, {Q, {}}).Z;
    const Vector w = gen::positive_vector(rng, nb + 2, 0.0, 1.0);
    CHECK(gen::rel_max_diff(solve_finite_exit(l, Vector(Q * w)), Vector(Z * w)) < 1e-9);
  }
}

TEST_CASE("property: nnls matches exhaustive search") {
  gen::Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const Index m = gen::integer(rng, 2, 10);
    const Index n = gen::integer(rng, 1, 6);
    Matrix A = Matrix::Random(m, n);
    Vector b = Vector::Random(m);
    for (Index i = 0; i < m; ++i) {
      b[i] = gen::uniform(rng, -1, 1);
      for (Index j = 0; j < n; ++j) A(i, j) = gen::uniform(rng, -1, 1);
    }
    const Vector x = nnls(A, b);
    const Vector oracle = brute_force_nnls(A, b);
    CHECK((x.array() >= 0).all());
    CHECK((A * x - b).squaredNorm() == doctest::Approx((A * oracle - b).squaredNorm()).epsilon(1e-9));
  }
}
