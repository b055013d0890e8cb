#include <cmath>

#include "doctest.h"
#include "ibmlab/measures.hpp"

using namespace ibmlab;
using namespace ibmlab::measures;
using ensembles::EnsembleFamily;
using ensembles::EnsembleSpec;

TEST_CASE("potential pair") {
  const auto p = PotentialPair::gaussian(2.0);
  const std::vector<double> a{0.0, 1.0}, b{0.0, 2.0}, c{0.5, 0.5};
  CHECK(p.hamiltonian(a) == doctest::Approx(0.5));
  CHECK(p.hamiltonian(b) == doctest::Approx(2.0 - 2.0 * std::log(2.0)));
  CHECK(p.boltzmann_weight(b) == doctest::Approx(std::exp(-p.hamiltonian(b))).epsilon(1e-14));
  CHECK(p.boltzmann_weight(c) == 0.0);
  CHECK(p.pair_potential(1.0, 3.0) == doctest::Approx(-2.0 * std::log(2.0)));
  const PotentialPair none{PotentialPair::Free::None, 1.0, 1.0};
  CHECK(none.free_potential(5.0) == 0.0);
  // beta = 0 has no pair interaction
  CHECK(PotentialPair::gaussian(0.0).pair_potential(1.0, 3.0) == 0.0);
}

TEST_CASE("logarithmic derivative of the gaussian ensemble") {
  const EnsembleSpec spec{EnsembleFamily::GaussianBeta, 4, 2.0, 1.0, 0};
  const auto d = LogDerivativeField::for_ensemble(spec);
  const auto c = Configuration::line({-1.0, 0.0, 0.5, 2.0});
  CHECK(d(1, c)[0] == doctest::Approx(-0.0 + 2.0 * (1.0 - 2.0 - 0.5)));
  CHECK(d(3, c)[0] == doctest::Approx(-2.0 + 2.0 * (1.0 / 3.0 + 0.5 + 1.0 / 1.5)));
  CHECK_THROWS_AS(LogDerivativeField::for_ensemble({EnsembleFamily::Ginibre, 4, 2.0}), DomainError);
}

TEST_CASE("test functions") {
  const auto g = TestFunction::gaussian_bump(0.5, 0.7);
  CHECK(g.value(0.5) == 1.0);
  CHECK(g.lo == doctest::Approx(0.5 - 8.4));
  const double h = 1e-6;
  for (double x : {-1.0, 0.2, 1.3}) CHECK(g.gradient(x) == doctest::Approx((g.value(x + h) - g.value(x - h)) / (2 * h)).epsilon(1e-7));
  const auto b = TestFunction::compact_bump(1.0, 0.5);
  CHECK(b.value(1.0) == doctest::Approx(1.0));
  CHECK_FALSE(b.in_support(1.5));
  CHECK(b.gradient(1.2) == doctest::Approx((b.value(1.2 + h) - b.value(1.2 - h)) / (2 * h)).epsilon(1e-7));
  const auto s = g + b;
  CHECK(s.value(1.2) == doctest::Approx(g.value(1.2) + b.value(1.2)));
  CHECK_THROWS_AS(TestFunction::gaussian_bump(0.0, 0.0), DomainError);
}

TEST_CASE("integration by parts for a single gaussian particle") {
  // Stein: E f'(X) = E X f(X). For f = exp(-(x-c)^2/(2w^2)):
  //   E f(X) = w / sqrt(1+w^2) exp(-c^2 / (2(1+w^2)))  and  E f'(X) = c/(1+w^2) E f(X)
  const double c = 0.5, w = 0.7;
  const double ef = w / std::sqrt(1 + w * w) * std::exp(-c * c / (2 * (1 + w * w)));
  const double exact = c / (1 + w * w) * ef;
  const EnsembleSpec spec{EnsembleFamily::GaussianBeta, 1, 2.0, 1.0, 3};
  const auto r = verify_ibp(spec, LogDerivativeField::for_ensemble(spec), TestFunction::gaussian_bump(c, w), 200000);
  CHECK_FALSE(r.inconclusive);
  CHECK(std::fabs(r.lhs - r.rhs) < 4 * r.std_error);
  // the lhs alone has standard deviation below 1 / sqrt(n)
  CHECK(std::fabs(r.lhs - exact) < 4.0 / std::sqrt(200000.0));
  CHECK(std::fabs(r.rhs - exact) < 4.0 / std::sqrt(200000.0));
}

TEST_CASE("integration by parts holds for GUE and fails for a wrong field") {
  const EnsembleSpec spec{EnsembleFamily::GaussianBeta, 6, 2.0, 1.0, 5};
  const auto f = TestFunction::gaussian_bump(0.5, 0.7);
  const auto good = verify_ibp(spec, LogDerivativeField::for_ensemble(spec), f, 100000);
  CHECK(std::fabs(good.lhs - good.rhs) < 4 * good.std_error);
  // drop half the pair interaction
  const auto bad = verify_ibp(spec, LogDerivativeField({dynamics::DriftFamily::Dyson, 1.0, INFINITY, 1.0, 1.0}), f, 100000);
  CHECK(std::fabs(bad.lhs - bad.rhs) > 10 * bad.std_error);
}

TEST_CASE("integration by parts with the zero function") {
  const EnsembleSpec spec{EnsembleFamily::GaussianBeta, 3, 2.0, 1.0, 1};
  const auto r = verify_ibp(spec, LogDerivativeField::for_ensemble(spec), TestFunction::zero(), 100);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  CHECK(r.std_error == 0.0);
  CHECK_THROWS_AS(verify_ibp(spec, LogDerivativeField::for_ensemble(spec), TestFunction::zero(), 1), DomainError);
}

TEST_CASE("quasi-gibbs ratio") {
  SUBCASE("no outside points means no spread") {
    const EnsembleSpec spec{EnsembleFamily::GaussianBeta, 2, 2.0, 1.0, 4};
    const auto q = quasi_gibbs_ratio(spec, 50.0, 2, 20);
    CHECK(q.spreads.size() == 20);
    CHECK(q.spread_max == 0.0);
  }
  SUBCASE("beta zero has no interaction") {
    const EnsembleSpec spec{EnsembleFamily::GaussianBeta, 6, 0.0, 1.0, 4};
    const auto q = quasi_gibbs_ratio(spec, 1.0, 2, 400);
    REQUIRE_FALSE(q.spreads.empty());
    CHECK(q.spread_max == 0.0);
  }
  SUBCASE("interacting outside points give a finite positive spread") {
    const EnsembleSpec spec{EnsembleFamily::GaussianBeta, 8, 2.0, 1.0, 4};
    const auto q = quasi_gibbs_ratio(spec, 1.0, 2, 400);
    CHECK(q.spread_q10 > 0.0);
    CHECK(std::isfinite(q.spread_max));
    CHECK(q.spread_q10 <= q.spread_q50);
    CHECK(q.spread_q50 <= q.spread_q90);
    CHECK(q.ratio_min <= q.ratio_max);
    // independent of the quadrature order once resolved
    const auto fine = quasi_gibbs_ratio(spec, 1.0, 2, 400, 24);
    CHECK(fine.spreads.size() == q.spreads.size());
    CHECK(fine.spread_q50 == doctest::Approx(q.spread_q50).epsilon(0.05));
  }
  SUBCASE("argument checks") {
    const EnsembleSpec spec{EnsembleFamily::GaussianBeta, 8, 2.0, 1.0, 4};
    CHECK_THROWS_AS(quasi_gibbs_ratio(spec, 1.0, 5, 10), DomainError);
    CHECK_THROWS_AS(quasi_gibbs_ratio({EnsembleFamily::LaguerreBeta, 4, 2.0, 1.0}, 1.0, 1, 10), DomainError);
    CHECK_THROWS_AS(quasi_gibbs_ratio(spec, 1e-9, 1, 10), Error);
  }
}
