#include <cmath>

#include "doctest.h"
#include "generators.hpp"
#include "subtask_forge/lmdp.hpp"

using namespace subtask_forge;

TEST_CASE("well-formed chain validates") {
  const Diagnostics d = validate_lmdp(gen::two_state_chain());
  CHECK(d.pass);
  CHECK(d.violations.empty());
}

TEST_CASE("column mass deficit is reported by column") {
  gen::Rng rng(5);
  Lmdp l = gen::random_lmdp(rng, 5, 2);
  Matrix pii = Matrix(l.dynamics.interior);
  Matrix pbi = Matrix(l.dynamics.boundary);
  pii.col(3) *= 0.0;
  pbi.col(3).setZero();
  pbi(0, 3) = 0.9;
  l.dynamics = {pii.sparseView(), pbi.sparseView()};
  const Diagnostics d = validate_lmdp(l);
  CHECK_FALSE(d.pass);
  REQUIRE(d.violations.size() == 1);
  CHECK(d.violations[0] == "column 3 sums to 0.9");
}

TEST_CASE("non-positive lambda is reported") {
  Lmdp l = gen::two_state_chain();
  l.lambda = 0.0;
  const Diagnostics d = validate_lmdp(l);
  CHECK_FALSE(d.pass);
  bool found = false;
  for (const auto& v : d.violations) found |= v == "lambda must be positive";
  CHECK(found);
}

TEST_CASE("negative entries and shape mismatches are reported") {
  Lmdp l = gen::two_state_chain();
  l.r_interior = Vector::Zero(3);
  CHECK_FALSE(validate_lmdp(l).pass);
  Lmdp m = gen::two_state_chain();
  Matrix pii = Matrix(m.dynamics.interior);
  pii(0, 0) = -0.1;
  pii(1, 0) = 0.6;
  m.dynamics.interior = pii.sparseView();
  CHECK_FALSE(validate_lmdp(m).pass);
}

TEST_CASE("single state desirability") {
  const Lmdp l = gen::single_state();
  CHECK(solve_finite_exit(l, Vector(Vector::Ones(1)))[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(solve_finite_exit(l, Vector(Vector::Constant(1, std::exp(1.0))))[0] ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(solve_iterative(l, Vector::Ones(1), 1e-12, 10)[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("two-state chain against the closed form") {
  const Lmdp l = gen::two_state_chain();
  const Vector q = Vector::Ones(1);
  const double e1 = std::exp(-1.0);
  const double z1 = 0.5 * e1 / (1.0 - 0.5 * e1 * e1);
  const double z2 = e1 * z1;
  const Vector z = solve_finite_exit(l, q);
  CHECK(z[0] == doctest::Approx(z1).epsilon(1e-14));
  CHECK(z[1] == doctest::Approx(z2).epsilon(1e-14));
  CHECK(z[0] == doctest::Approx(0.19729).epsilon(1e-4));
  CHECK(z[1] == doctest::Approx(0.07258).epsilon(1e-4));
  const Vector zi = solve_iterative(l, q, 1e-15, 10000);
  CHECK(gen::rel_max_diff(zi, z) < 1e-9);
  CHECK(bellman_residual(l, z, q) < 1e-15);
}

TEST_CASE("optimal policy on the two-state chain") {
  const Lmdp l = gen::two_state_chain();
  const Vector q = Vector::Ones(1);
  const Vector z = solve_finite_exit(l, q);
  const PassiveDynamics a = optimal_policy(l, z, q);
  const double expected = 0.5 * z[1] / (0.5 * z[1] + 0.5 * 1.0);
  CHECK(a.interior.coeff(1, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(a.interior.coeff(1, 0) == doctest::Approx(0.06767).epsilon(1e-3));
  CHECK(a.interior.coeff(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("optimal policy examples") {
  SUBCASE("constant desirability leaves passive dynamics unchanged") {
    gen::Rng rng(11);
    const Lmdp l = gen::random_lmdp(rng, 8, 3);
    const PassiveDynamics a = optimal_policy(l, Vector::Constant(8, 0.7), Vector::Constant(3, 0.7));
    CHECK((Matrix(a.interior) - Matrix(l.dynamics.interior)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((Matrix(a.boundary) - Matrix(l.dynamics.boundary)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("uniform prior over two successors gives proportional control") {
    Lmdp l;
    l.space = {3, 1, {}};
    Matrix pii = Matrix::Zero(3, 3);
    pii(1, 0) = 0.5;
    pii(2, 0) = 0.5;
    Matrix pbi = Matrix::Zero(1, 3);
    pbi(0, 1) = 1.0;
    pbi(0, 2) = 1.0;
    l.dynamics = {pii.sparseView(), pbi.sparseView()};
    l.r_interior = Vector::Zero(3);
    Vector z(3);
    z << 1.0, 0.9, 0.1;
    const PassiveDynamics a = optimal_policy(l, z, Vector::Ones(1));
    CHECK(a.interior.coeff(1, 0) == doctest::Approx(0.9));
    CHECK(a.interior.coeff(2, 0) == doctest::Approx(0.1));
  }
}

TEST_CASE("value from desirability") {
  CHECK(value_from_desirability(Vector::Ones(2), 3.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(value_from_desirability(Vector::Constant(1, std::exp(1.0)), 2.0)[0] == doctest::Approx(2.0));
  CHECK(value_from_desirability(Vector::Constant(1, 0.5), 1.0)[0] == doctest::Approx(-0.693147).epsilon(1e-6));
}

TEST_CASE("non-positive boundary reward is a domain error") {
  const Lmdp l = gen::two_state_chain();
  CHECK_THROWS_AS(solve_finite_exit(l, Vector(Vector::Zero(1))), DomainError);
  CHECK_THROWS_AS(solve_iterative(l, Vector::Zero(1), 1e-12, 10), DomainError);
}

TEST_CASE("trapped states are not contractive") {
  Lmdp l;
  l.space = {2, 1, {}};
  Matrix pii = Matrix::Zero(2, 2);
  pii(1, 0) = 1.0;
  pii(0, 1) = 1.0;
  l.dynamics = {pii.sparseView(), SparseMatrix(1, 2)};
  l.r_interior = Vector::Zero(2);
  CHECK_THROWS_AS(solve_finite_exit(l, Vector(Vector::Ones(1))), SingularSystemError);
}

TEST_CASE("property: direct and iterative solves agree on random Lmdps") {
  gen::Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = gen::integer(rng, 1, 30);
    const int nb = gen::integer(rng, 1, 6);
    const Lmdp l = gen::random_lmdp(rng, n, nb);
    REQUIRE(validate_lmdp(l).pass);
    const Vector q = gen::positive_vector(rng, nb);
    const Vector z = solve_finite_exit(l, q);
    CHECK((z.array() > 0).all());
    CHECK(bellman_residual(l, z, q) <= 1e-10 * std::max(1.0, z.maxCoeff()));
    CHECK(gen::rel_max_diff(solve_iterative(l, q, 1e-14, 200000), z) < 1e-9);
    const double c = gen::uniform(rng, 0.1, 10.0);
    CHECK(gen::rel_max_diff(solve_finite_exit(l, Vector(c * q)), Vector(c * z)) < 1e-12);
    const PassiveDynamics a = optimal_policy(l, z, q);
    const Vector sums = (Matrix(a.interior).colwise().sum() + Matrix(a.boundary).colwise().sum()).transpose();
    CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(Matrix(a.interior).minCoeff() >= 0.0);
  }
}

TEST_CASE("matrix solve matches column solves") {
  gen::Rng rng(7);
  const Lmdp l = gen::random_lmdp(rng, 20, 4);
  const Matrix Q = gen::positive_matrix(rng, 4, 6);
  const Matrix Z = solve_finite_exit(l, Q);
  for (Index t = 0; t < Q.cols(); ++t) {
    CHECK(gen::rel_max_diff(Z.col(t), solve_finite_exit(l, Vector(Q.col(t)))) < 1e-14);
  }
}
