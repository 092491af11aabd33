#include <catch2/catch_amalgamated.hpp>

#include "hypolab/hypolab.hpp"
#include "oracles.hpp"

using namespace hypolab;

TEST_CASE("abelian composition is vector addition") {
  const Group g = Group::make(abelian_spec(3));
  const Vec a = oracles::random_vec(3, 1.0, 0xB101, 0);
  const Vec b = oracles::random_vec(3, 1.0, 0xB101, 1);
  CHECK((g.bch(a, b) - (a + b)).norm() == 0.0);
}

TEST_CASE("heisenberg bch matches the matrix model") {
  const Group g = Group::make(heisenberg3_spec());
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const Vec a = oracles::random_vec(3, 1.5, 0xB102, 2 * trial);
    const Vec b = oracles::random_vec(3, 1.5, 0xB102, 2 * trial + 1);
    const Vec lhs = g.bch(a, b);
    const Vec rhs = oracles::heisenberg_bch_matrix(a, b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
    // Closed form at step 2: a + b + ½[a,b].
    const Vec closed = a + b + 0.5 * g.spec().bracket(a, b);
    CHECK((lhs - closed).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("free(2,4) bch matches the order-4 series") {
  const Group g = Group::make(free_nilpotent(2, 4));
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const Vec a = oracles::random_vec(g.dim(), 0.8, 0xB103, 2 * trial);
    const Vec b = oracles::random_vec(g.dim(), 0.8, 0xB103, 2 * trial + 1);
    const Vec lhs = g.bch(a, b);
    const Vec rhs = oracles::bch_order4(g.spec(), a, b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("exact bch of the two generators in free(2,3)") {
  const Group g = Group::make(free_nilpotent(2, 3));
  const RatVec z = g.bch_exact(rat_basis_vector(5, 0), rat_basis_vector(5, 1));
  CHECK(z[0] == Rat(1));
  CHECK(z[1] == Rat(1));
  CHECK(z[2] == Rat(1, 2));
  CHECK(z[3] == Rat(1, 12));
  CHECK(z[4] == Rat(-1, 12));
}

TEST_CASE("bch group laws") {
  const Group g = Group::make(free_nilpotent(2, 4));
  SECTION("identity and inverse") {
    const Vec a = oracles::random_vec(g.dim(), 1.0, 0xB104, 0);
    CHECK((g.bch(Vec(Vec::Zero(g.dim())), a) - a).norm() == 0.0);
    CHECK((g.bch(a, Vec(Vec::Zero(g.dim()))) - a).norm() == 0.0);
    CHECK(g.bch(a, Vec(-a)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("associativity in doubles") {
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
      const Vec a = oracles::random_vec(g.dim(), 0.9, 0xB105, 3 * trial);
      const Vec b = oracles::random_vec(g.dim(), 0.9, 0xB105, 3 * trial + 1);
      const Vec c = oracles::random_vec(g.dim(), 0.9, 0xB105, 3 * trial + 2);
      const Vec lhs = g.bch(a, g.bch(b, c));
      const Vec rhs = g.bch(g.bch(a, b), c);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
  SECTION("associativity in exact arithmetic") {
    const Group g3 = Group::make(free_nilpotent(2, 3));
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
      const RatVec a = oracles::random_rat_vec(5, 0xB106, 3 * trial);
      const RatVec b = oracles::random_rat_vec(5, 0xB106, 3 * trial + 1);
      const RatVec c = oracles::random_rat_vec(5, 0xB106, 3 * trial + 2);
      const RatVec lhs = g3.bch_exact(a, g3.bch_exact(b, c));
      const RatVec rhs = g3.bch_exact(g3.bch_exact(a, b), c);
      for (int l = 0; l < 5; ++l) CHECK(lhs[l] == rhs[l]);
    }
  }
  SECTION("graded homogeneity") {
    const Mat dr = dilation_matrix(g.spec(), 0.6);
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      const Vec a = oracles::random_vec(g.dim(), 1.0, 0xB107, 2 * trial);
      const Vec b = oracles::random_vec(g.dim(), 1.0, 0xB107, 2 * trial + 1);
      const Vec lhs = g.bch(Vec(dr * a), Vec(dr * b));
      const Vec rhs = dr * g.bch(a, b);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("bch table caps and accessors") {
  CHECK(BchTable::get(3).depth() == 3);
  CHECK(BchTable::get(3).basis().dim() == oracles::witt_dimension(2, 3));
  CHECK_THROWS_AS(BchTable::get(0), std::invalid_argument);
  CHECK_THROWS_AS(BchTable::get(7), std::invalid_argument);
}

TEST_CASE("translation jacobians") {
  const Group heis = Group::make(heisenberg3_spec());
  SECTION("heisenberg closed form I + ad_w/2") {
    Vec w(3);
    w << 0.3, -0.7, 0.2;
    const Mat ml = heis.translation_jacobian_left(w);
    const Mat expected = Mat::Identity(3, 3) + 0.5 * heis.spec().ad(w);
    CHECK((ml - expected).cwiseAbs().maxCoeff() < 1e-15);
    Vec e1 = Vec::Zero(3);
    e1[0] = 1.0;
    const Vec img = ml * e1;
    CHECK(img[0] == 1.0);
    CHECK(img[1] == 0.0);
    CHECK(img[2] == Catch::Approx(0.35).margin(1e-15));
  }
  SECTION("dual routes agree on free(2,4)") {
    const Group g = Group::make(free_nilpotent(2, 4));
    for (std::uint64_t trial = 0; trial < 6; ++trial) {
      const Vec w = oracles::random_vec(g.dim(), 1.1, 0xB108, trial);
      CHECK_NOTHROW(g.translation_jacobian_left(w));
      CHECK_NOTHROW(g.translation_jacobian_right(w));
      CHECK((g.translation_jacobian_left(w) - g.jacobian_left_fast(w)).norm() == 0.0);
      CHECK((g.jacobian_right_fast(w) - g.jacobian_left_fast(Vec(-w))).norm() == 0.0);
    }
  }
  SECTION("right jacobian composes with the adjoint") {
    // M_L(w) = M_R(w)·Ad_{exp w}: both sides are the same polynomial in ad_w.
    const Group g = Group::make(free_nilpotent(2, 4));
    for (std::uint64_t trial = 0; trial < 6; ++trial) {
      const Vec w = oracles::random_vec(g.dim(), 1.1, 0xB109, trial);
      const Mat lhs = g.jacobian_right_fast(w) * g.adjoint(w);
      const Mat rhs = g.jacobian_left_fast(w);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SECTION("finite differences confirm the derivative meaning") {
    const Group g = Group::make(free_nilpotent(2, 3));
    const Vec w = oracles::random_vec(g.dim(), 0.9, 0xB10A, 0);
    const Mat ml = g.jacobian_left_fast(w);
    const Mat mr = g.jacobian_right_fast(w);
    const double eps = 1e-6;
    for (int j = 0; j < g.dim(); ++j) {
      Vec ej = Vec::Zero(g.dim());
      ej[j] = 1.0;
      const Vec fd_l = (g.bch(w, Vec(eps * ej)) - g.bch(w, Vec(-eps * ej))) / (2.0 * eps);
      const Vec fd_r = (g.bch(Vec(eps * ej), w) - g.bch(Vec(-eps * ej), w)) / (2.0 * eps);
      CHECK((fd_l - ml.col(j)).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((fd_r - mr.col(j)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}
