#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "hypolab/hypolab.hpp"
#include "oracles.hpp"

using namespace hypolab;

TEST_CASE("phase streams partition the stream space") {
  CHECK(phase_stream(0, 5) == 5);
  CHECK(phase_stream(1, 0) == (std::uint64_t(1) << 40));
  CHECK(phase_stream(3, 7) == 3 * (std::uint64_t(1) << 40) + 7);
}

TEST_CASE("endpoint ensembles freeze per-path data column by column") {
  const Group g = Group::make(heisenberg3_spec());
  const EndpointEnsemble ens = build_ensemble(g, 1.0, 8, 3, 5);
  REQUIRE(ens.endpoints.cols() == 3);
  REQUIRE(ens.ml.rows() == 2 * 3);
  for (long j = 0; j < 3; ++j) {
    const DiscretePath path = DiscretePath::sample(g, 1.0, 8, 5, phase_stream(0, j));
    const Vec w = path.endpoint();
    CHECK((ens.endpoints.col(j) - w).cwiseAbs().maxCoeff() == 0.0);
    const Mat ml = g.jacobian_left_fast(w);
    const Mat mr = g.jacobian_right_fast(w);
    for (int i = 0; i < 2; ++i) {
      CHECK((ens.ml.col(j).segment(i * 3, 3) - ml.col(g.spec().generators[i]))
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK((ens.mr.col(j).segment(i * 3, 3) - mr.col(g.spec().generators[i]))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("heat semigroup estimates") {
  SECTION("abelian second moment is the horizon") {
    const Group g = Group::make(abelian_spec(2));
    const TestFunction f(2, {{{2, 0}, 1.0}}, {0.0, 0.0});
    const McEstimate est = heat_mc(g, f, 1.0, 20000, 64, 12);
    CHECK(std::abs(est.value - 1.0) < 2.0 * est.half_width);
    CHECK(est.n_samples == 20000);
  }
  SECTION("dilation coupling makes the scaling identity exact pathwise") {
    const Group g = Group::make(free_nilpotent(2, 3));
    const TestFunction f(5, {{{1, 1, 0, 0, 0}, 0.7}, {{0, 0, 1, 0, 0}, -0.4}},
                         {0.1, 0.1, 0.05, 0.02, 0.02});
    const McEstimate lhs = heat_mc(g, f.dilated(g.spec(), 2.0), 1.0, 500, 32, 9);
    const McEstimate rhs = heat_mc(g, f, 4.0, 500, 32, 9);
    CHECK(lhs.value == rhs.value);
  }
}

TEST_CASE("gradient ratio functional") {
  const Group g = Group::make(abelian_spec(2));
  const EndpointEnsemble ens = build_ensemble(g, 1.0, 16, 400, 21);

  SECTION("linear functions sit exactly at ratio one") {
    const TestFunction f(2, {{{1, 0}, 1.0}}, {0.0, 0.0});
    const RatioResult res = ratio_on_ensemble(ens, f, 2.0, 200);
    CHECK(res.ratio == 1.0);
    CHECK(res.numerator == 1.0);
    CHECK(res.denominator == 1.0);
    CHECK(res.ci_half == 0.0);
  }
  SECTION("degenerate denominators are recognized") {
    const TestFunction constant(2, {{{0, 0}, 1.0}}, {0.0, 0.0});
    RatioResult out;
    CHECK_FALSE(ratio_point(ens, constant, 2.0, out));
    CHECK_THROWS_AS(ratio_on_ensemble(ens, constant, 2.0, 100), std::runtime_error);
  }
  SECTION("p must exceed one") {
    const TestFunction f(2, {{{1, 0}, 1.0}}, {0.0, 0.0});
    CHECK_THROWS_AS(ratio_on_ensemble(ens, f, 1.0, 100), std::invalid_argument);
  }
}

TEST_CASE("monomial enumeration") {
  const auto exps = detail::monomial_exponents(2, 3);
  CHECK(exps.size() == 9);  // C(5,3) − 1 nonconstant monomials
  std::set<std::vector<int>> seen;
  for (const auto& e : exps) {
    REQUIRE(e.size() == 2);
    const int deg = e[0] + e[1];
    CHECK(deg >= 1);
    CHECK(deg <= 3);
    seen.insert(e);
  }
  CHECK(seen.size() == exps.size());
  CHECK(detail::monomial_exponents(3, 2).size() == 9);  // C(5,2) − 1
}

TEST_CASE("random test functions are deterministic and inside the family") {
  FamilyConfig fam;
  const TestFunction f = random_test_function(3, fam, 77, 4);
  const TestFunction f2 = random_test_function(3, fam, 77, 4);
  const TestFunction g2 = random_test_function(3, fam, 77, 5);
  REQUIRE(f.monomials().size() == f2.monomials().size());
  const Vec w = oracles::random_vec(3, 1.0, 3, 3);
  CHECK(f(w) == f2(w));
  CHECK(f(w) != g2(w));
  CHECK(f.bounded());
  for (double r : f.rates()) {
    CHECK(r >= 0.1);
    CHECK(r <= fam.rate_max);
  }
  for (const auto& m : f.monomials()) CHECK(std::abs(m.coef) <= 0.5 * fam.coef_bound);
}

TEST_CASE("kp estimation on the abelian calibration point") {
  const Group g = Group::make(abelian_spec(2));
  FamilyConfig fam;
  fam.degree = 2;
  KpBudget budget;
  budget.restarts = 3;
  budget.iterations = 40;
  budget.N_search = 500;
  budget.N_eval = 2000;
  budget.n = 16;
  budget.bootstrap = 200;
  const KpResult res = estimate_kp(g, 1.0, 2.0, fam, budget, 5);
  CHECK(res.value >= 1.0 - 1e-12);  // canonical linear restart is exact
  CHECK(std::abs(res.value - 1.0) <= std::max(3.0 * res.ci_half, 1e-9));
  CHECK(res.restart_values.size() == 3);
  CHECK(res.final_ratio.ratio == res.value);
  CHECK_FALSE(res.argmax.monomials().empty());
  CHECK_THROWS_AS(estimate_kp(g, 1.0, 1.0, fam, budget, 5), std::invalid_argument);
}

TEST_CASE("cp estimation surfaces the bracket bookkeeping") {
  const Group heis = Group::make(heisenberg3_spec());
  const CpResult res = estimate_cp(heis, 1.0, 2.0, 500, 16, 3);
  CHECK(res.constant == 3.0);          // M^{p/2}·T^{(p/2−1)⁺} = 3 at p = 2
  CHECK(res.max_per_generator == 3);
  CHECK(res.total_terms == 6);
  CHECK(res.terms.size() == 6);
  CHECK(res.value > 0.0);
  CHECK(std::isfinite(res.value));
  CHECK(res.ci_half >= 0.0);
  CHECK(res.t == 1.0);
  CHECK(res.p == 2.0);
  for (const auto& term : res.terms) {
    CHECK((term.i == 0 || term.i == 1));
    CHECK(term.contribution >= 0.0);
  }

  CHECK_THROWS_AS(estimate_cp(heis, 1.0, 1.0, 100, 16, 3), std::invalid_argument);
  const Group free23 = Group::make(free_nilpotent(2, 3));
  CHECK_THROWS_AS(estimate_cp(free23, 1.0, 2.0, 100, 16, 3), std::invalid_argument);
  CHECK_THROWS_AS(estimate_cp(free23, 1.0, 2.0, 100, 64, 3, true), std::invalid_argument);
  const Group product = Group::make(make_named_spec("heisenberg3xabelian:1"));
  CHECK_THROWS_AS(estimate_cp(product, 1.0, 2.0, 100, 16, 3), std::invalid_argument);
}

TEST_CASE("structural zeros of the adjoint coefficients are detected exactly") {
  const Group g = Group::make(heisenberg3_spec());
  // On the heisenberg group the generator columns of Ad_frame(g^{-1}) pick up
  // a vertical component only.
  CHECK_FALSE(detail::coefficient_vanishes(g, 2, 0));
  CHECK_FALSE(detail::coefficient_vanishes(g, 2, 1));
  CHECK(detail::coefficient_vanishes(g, 1, 0));
  CHECK(detail::coefficient_vanishes(g, 0, 1));
}

TEST_CASE("poincare gap on the abelian calibration point") {
  const Group g = Group::make(abelian_spec(2));
  const TestFunction f(2, {{{1, 0}, 1.0}}, {0.0, 0.0});
  const PoincareResult res = poincare_gap(g, f, 0.8, 20000, 16, 31, 1.0, 0.0);
  CHECK(std::abs(res.variance.value - 0.8) < 2.0 * res.variance.half_width);
  CHECK(res.bound_rhs.value == Catch::Approx(0.8).epsilon(1e-12));
  CHECK(res.k2 == 1.0);
  CHECK(std::abs(res.slack) <= 4.0 * res.slack_ci);
}

TEST_CASE("scaling checks couple the dilated and reference ensembles") {
  const Group g = Group::make(heisenberg3_spec());
  const TestFunction f(3, {{{1, 0, 0}, 1.0}, {{0, 1, 1}, 0.3}}, {0.2, 0.2, 0.1});
  const ScalingResult res = scaling_check(g, f, 2.0, 2.0, 2000, 16, 7);
  CHECK(res.ratio_z <= 3.0);
  REQUIRE(res.heat_pairs.size() == 2);
  for (const auto& pair : res.heat_pairs) CHECK(pair.z <= 3.0);

  LieAlgebraSpec ungraded = heisenberg3_spec();
  ungraded.grading.reset();
  ungraded.finalize();
  const Group h = Group::make(ungraded);
  CHECK_THROWS_AS(scaling_check(h, f, 2.0, 2.0, 100, 8, 1), std::invalid_argument);
}

TEST_CASE("elliptic envelope arithmetic") {
  CHECK(elliptic_envelope(1.0, 2.0, 10.0, -0.5) == Catch::Approx(std::exp(0.5)));
  CHECK(elliptic_envelope(1.0, 2.0, 1.2, 0.3) == 1.0);
  CHECK(elliptic_envelope(2.0, 2.0, 50.0, -1.0) == Catch::Approx(std::exp(2.0)));
}

TEST_CASE("gradient heat comparisons agree across routes") {
  const Group g = Group::make(heisenberg3_spec());
  const TestFunction f(3, {{{1, 0, 0}, 0.8}, {{0, 0, 1}, -0.5}}, {0.3, 0.3, 0.2});
  const GradHeatResult res = grad_heat_mc(g, f, 1.0, 4000, 16, 17);
  REQUIRE(res.components.size() == 2);
  REQUIRE(res.fd_components.size() == 2);
  CHECK(res.max_z < 5.0);
  double norm_sq = 0.0;
  for (const auto& c : res.components) norm_sq += c.value * c.value;
  CHECK(res.grad_norm == Catch::Approx(std::sqrt(norm_sq)).epsilon(1e-12));
}
