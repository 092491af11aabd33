#include <catch2/catch_amalgamated.hpp>

#include "hypolab/hypolab.hpp"
#include "oracles.hpp"

using namespace hypolab;

namespace {

TestFunction sample_function() {
  std::vector<Monomial> ms{{{2, 0, 1}, 0.8}, {{0, 1, 0}, -1.3}, {{0, 0, 0}, 0.4}};
  return TestFunction(3, ms, {0.3, 0.0, 0.2});
}

}  // namespace

TEST_CASE("values and gradients against direct evaluation") {
  const TestFunction f = sample_function();
  Vec w(3);
  w << 0.7, -1.1, 0.4;
  const double env = std::exp(-(0.3 * 0.49 + 0.2 * 0.16));
  const double poly = 0.8 * 0.49 * 0.4 - 1.3 * (-1.1) + 0.4;
  CHECK(f(w) == Catch::Approx(poly * env).epsilon(1e-14));

  const Vec grad = f.gradient(w);
  const double eps = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Vec wp = w, wm = w;
    wp[j] += eps;
    wm[j] -= eps;
    CHECK(grad[j] == Catch::Approx((f(wp) - f(wm)) / (2.0 * eps)).margin(1e-7));
  }
}

TEST_CASE("boundedness depends on envelope coverage") {
  CHECK_FALSE(sample_function().bounded());  // w2 appears with rate 0
  CHECK(TestFunction(2, {{{1, 0}, 1.0}}, {0.5, 0.0}).bounded());
  CHECK(TestFunction(2, {{{0, 0}, 2.0}}, {0.0, 0.0}).bounded());  // constants
  CHECK_FALSE(TestFunction(1, {{{3}, 1.0}}, {0.0}).bounded());
}

TEST_CASE("construction validates shapes and rates") {
  CHECK_THROWS_AS(TestFunction(2, {{{1, 0, 0}, 1.0}}, {0.1, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction(2, {{{1, 0}, 1.0}}, {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction(2, {{{1, 0}, 1.0}}, {0.1, -0.2}), std::invalid_argument);
}

TEST_CASE("dilation stays in the family exactly") {
  const LieAlgebraSpec spec = free_nilpotent(2, 3);
  std::vector<Monomial> ms{{{1, 0, 1, 0, 0}, 0.9}, {{0, 0, 0, 1, 0}, -0.5}};
  const TestFunction f(5, ms, {0.2, 0.3, 0.1, 0.05, 0.15});
  const double r = 0.7;
  const TestFunction fr = f.dilated(spec, r);
  const Mat dil = dilation_matrix(spec, r);

  for (std::uint64_t trial = 0; trial < 6; ++trial) {
    const Vec w = oracles::random_vec(5, 1.2, 0x7E57, trial);
    CHECK(fr(w) == Catch::Approx(f(Vec(dil * w))).epsilon(1e-13).margin(1e-15));
  }
  // Monomial weight 1+2 = 3 rescales by r³; rates by r^{2·weight}.
  CHECK(fr.monomials()[0].coef == Catch::Approx(0.9 * std::pow(r, 3)));
  CHECK(fr.monomials()[1].coef == Catch::Approx(-0.5 * std::pow(r, 3)));
  CHECK(fr.rates()[2] == Catch::Approx(0.1 * std::pow(r, 4)));
}

TEST_CASE("linear precomposition and its gradient") {
  const TestFunction f = sample_function();
  Mat a(3, 2);
  a << 1.0, 0.5, -0.3, 0.2, 0.0, 1.1;
  const TestFunction g = f.precomposed(a);
  CHECK(g.input_dim() == 2);

  Vec u(2);
  u << 0.4, -0.9;
  CHECK(g(u) == Catch::Approx(f(Vec(a * u))).epsilon(1e-14));

  const Vec grad = g.gradient(u);
  const double eps = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Vec up = u, um = u;
    up[j] += eps;
    um[j] -= eps;
    CHECK(grad[j] == Catch::Approx((g(up) - g(um)) / (2.0 * eps)).margin(1e-7));
  }

  // Chained precompositions multiply the maps.
  Mat b(2, 2);
  b << 0.7, -0.1, 0.2, 0.9;
  const TestFunction h = g.precomposed(b);
  CHECK(h(u) == Catch::Approx(f(Vec(a * b * u))).epsilon(1e-13));

  CHECK_THROWS_AS(f.precomposed(Mat(Mat::Identity(2, 2))), std::invalid_argument);
}

TEST_CASE("test function json round trip") {
  const TestFunction f = sample_function().precomposed(Mat(2.0 * Mat::Identity(3, 3)));
  const auto j = f.to_json();
  const TestFunction back = TestFunction::from_json(j);
  REQUIRE(back.input_dim() == 3);
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const Vec w = oracles::random_vec(3, 1.0, 0x7E58, trial);
    CHECK(back(w) == f(w));
    CHECK((back.gradient(w) - f.gradient(w)).norm() == 0.0);
  }

  auto bad = sample_function().to_json();
  bad["envelope_rates"][1] = -0.5;
  CHECK_THROWS_AS(TestFunction::from_json(bad), std::invalid_argument);
}
