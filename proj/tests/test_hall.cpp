#include <catch2/catch_amalgamated.hpp>

#include "hypolab/hypolab.hpp"
#include "oracles.hpp"

using namespace hypolab;

TEST_CASE("hall basis dimensions match the Witt formula") {
  const std::vector<std::pair<int, int>> cases{{2, 2}, {2, 3}, {2, 4}, {2, 5},
                                               {2, 6}, {3, 2}, {3, 3}, {4, 2}};
  for (const auto& [k, m] : cases) {
    const HallBasis hb(k, m);
    CHECK(hb.dim() == oracles::witt_dimension(k, m));
    const auto per_weight = hb.dims_per_weight();
    REQUIRE(static_cast<int>(per_weight.size()) == m);
    for (int n = 1; n <= m; ++n) CHECK(per_weight[n - 1] == oracles::witt_layer(k, n));
  }
  CHECK(oracles::witt_dimension(2, 2) == 3);
  CHECK(oracles::witt_dimension(2, 3) == 5);
  CHECK(oracles::witt_dimension(3, 2) == 6);
}

TEST_CASE("hall trees for free(2,3) are the textbook basis") {
  const HallBasis hb(2, 3);
  REQUIRE(hb.dim() == 5);
  CHECK(hb.tree_string(0) == "1");
  CHECK(hb.tree_string(1) == "2");
  CHECK(hb.tree_string(2) == "[1,2]");
  CHECK(hb.tree_string(3) == "[1,[1,2]]");
  CHECK(hb.tree_string(4) == "[2,[1,2]]");
  CHECK(hb.weight(2) == 2);
  CHECK(hb.weight(4) == 3);
}

TEST_CASE("hall products are antisymmetric and satisfy Jacobi exactly") {
  const HallBasis hb(2, 4);
  const int d = hb.dim();

  auto add_scaled = [](SparseRat& acc, const SparseRat& src, const Rat& c) {
    for (const auto& [i, v] : src) sparse_add(acc, i, c * v);
  };
  auto is_zero = [](const SparseRat& s) {
    for (const auto& [i, v] : s)
      if (v != 0) return false;
    return true;
  };

  for (int u = 0; u < d; ++u) {
    CHECK(hb.product(u, u).empty());
    for (int v = u + 1; v < d; ++v) {
      SparseRat sum;
      add_scaled(sum, hb.product(u, v), Rat(1));
      add_scaled(sum, hb.product(v, u), Rat(1));
      CHECK(is_zero(sum));
    }
  }

  // Cyclic Jacobi sum over all basis triples, in exact arithmetic.
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      for (int c = b + 1; c < d; ++c) {
        SparseRat ea{{a, Rat(1)}}, eb{{b, Rat(1)}}, ec{{c, Rat(1)}};
        SparseRat sum;
        add_scaled(sum, hb.bracket(hb.bracket(ea, eb), ec), Rat(1));
        add_scaled(sum, hb.bracket(hb.bracket(eb, ec), ea), Rat(1));
        add_scaled(sum, hb.bracket(hb.bracket(ec, ea), eb), Rat(1));
        CHECK(is_zero(sum));
      }
}

TEST_CASE("free nilpotent specs") {
  const HallBasis* hb = nullptr;
  const LieAlgebraSpec s23 = free_nilpotent(2, 3, &hb);
  REQUIRE(hb != nullptr);
  CHECK(s23.dim == 5);
  CHECK(s23.generators == std::vector<int>{0, 1});
  REQUIRE(s23.grading);
  CHECK(*s23.grading == std::vector<int>{1, 1, 2, 3, 3});

  auto basis = [](int i) {
    Vec v = Vec::Zero(5);
    v[i] = 1.0;
    return v;
  };
  CHECK((s23.bracket(basis(0), basis(1)) - basis(2)).norm() == 0.0);
  CHECK((s23.bracket(basis(0), basis(2)) - basis(3)).norm() == 0.0);
  CHECK((s23.bracket(basis(1), basis(2)) - basis(4)).norm() == 0.0);
  CHECK(s23.bracket(basis(0), basis(3)).norm() == 0.0);  // weight 4 truncates
  CHECK(s23.bracket(basis(1), basis(4)).norm() == 0.0);

  // Induced structure constants pass the exact Jacobi/antisymmetry audit.
  CHECK(validate(free_nilpotent(2, 4)).ok);
  CHECK(validate(free_nilpotent(3, 3)).ok);
  CHECK(validate(free_nilpotent(2, 5)).ok);

  CHECK_THROWS_AS(free_nilpotent(1, 2), std::invalid_argument);
  CHECK_THROWS_AS(free_nilpotent(2, 7), std::invalid_argument);
  CHECK_THROWS_AS(free_nilpotent(2, 0), std::invalid_argument);
}

TEST_CASE("quotient lift is an exact homomorphism") {
  const HallBasis* hb22 = nullptr;
  const LieAlgebraSpec free22 = free_nilpotent(2, 2, &hb22);
  const LieAlgebraSpec heis = heisenberg3_spec();
  const auto pi = lift_homomorphism(free22, *hb22, heis);
  REQUIRE(pi.size() == 3);
  CHECK(pi[0] == rat_basis_vector(3, 0));
  CHECK(pi[1] == rat_basis_vector(3, 1));
  CHECK(pi[2] == rat_basis_vector(3, 2));

  const HallBasis* hb23 = nullptr;
  const LieAlgebraSpec free23 = free_nilpotent(2, 3, &hb23);
  const auto pi23 = lift_homomorphism(free23, *hb23, heis);
  REQUIRE(pi23.size() == 5);
  CHECK(rat_vec_is_zero(pi23[3]));  // weight-3 layer dies in a step-2 group
  CHECK(rat_vec_is_zero(pi23[4]));

  // π[x, y] = [πx, πy] on random rational elements, in exact arithmetic.
  auto apply = [&](const RatVec& x) {
    RatVec out(3, Rat(0));
    for (int j = 0; j < 5; ++j)
      for (int l = 0; l < 3; ++l) out[l] += pi23[j][l] * x[j];
    return out;
  };
  for (std::uint64_t trial = 0; trial < 6; ++trial) {
    const RatVec x = oracles::random_rat_vec(5, 0x11F7, 2 * trial);
    const RatVec y = oracles::random_rat_vec(5, 0x11F7, 2 * trial + 1);
    const RatVec lhs = apply(free23.bracket(x, y));
    const RatVec rhs = heis.bracket(apply(x), apply(y));
    for (int l = 0; l < 3; ++l) CHECK(lhs[l] == rhs[l]);
  }

  const HallBasis* hb32 = nullptr;
  const LieAlgebraSpec free32 = free_nilpotent(3, 2, &hb32);
  CHECK_THROWS_AS(lift_homomorphism(free32, *hb32, heis), std::invalid_argument);
}
