#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ibmlab/dynamics.hpp"
#include "ibmlab/ensembles.hpp"

using namespace ibmlab;
using namespace ibmlab::dynamics;

namespace {

DriftModel dyson(double beta = 2.0, double r = INFINITY, double confinement = 0.0) {
  return {DriftFamily::Dyson, beta, r, 1.0, confinement};
}

}  // namespace

TEST_CASE("drift model validation") {
  CHECK_THROWS_AS(dyson(0.0).validate(), DomainError);
  CHECK_THROWS_AS(dyson(2.0, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(dyson(2.0, INFINITY, -1.0).validate(), DomainError);
  CHECK_THROWS_AS((DriftModel{DriftFamily::Airy, 2.0, INFINITY}).validate(), DomainError);
  CHECK_THROWS_AS((DriftModel{DriftFamily::Bessel, 2.0, INFINITY, 0.5}).validate(), DomainError);
  CHECK_THROWS_AS((DriftModel{DriftFamily::Ginibre1, 1.0, INFINITY}).validate(), DomainError);
  CHECK_THROWS_AS((DriftModel{DriftFamily::Ginibre2, 2.0, INFINITY, 1.0, 0.5}).validate(), DomainError);
  CHECK(drift_family_from_string("ginibre2") == DriftFamily::Ginibre2);
  CHECK_THROWS_AS(drift_family_from_string("ou"), DomainError);
}

TEST_CASE("one-dimensional drifts by hand") {
  const auto c = Configuration::line({-1.0, 0.0, 2.0});
  SUBCASE("dyson") {
    CHECK(drift(dyson(), 0, c)[0] == doctest::Approx(-1.0 - 1.0 / 3.0));
    CHECK(drift(dyson(), 1, c)[0] == doctest::Approx(1.0 - 0.5));
    CHECK(drift(dyson(1.0), 2, c)[0] == doctest::Approx(0.5 * (1.0 / 3.0 + 0.5)));
    // truncation keeps neighbours closer than r
    CHECK(drift(dyson(2.0, 1.5), 0, c)[0] == doctest::Approx(-1.0));
    CHECK(drift(dyson(2.0, 0.5), 0, c)[0] == 0.0);
    // confinement
    CHECK(drift(dyson(2.0, INFINITY, 1.0), 2, c)[0] == doctest::Approx(1.0 / 3.0 + 0.5 - 1.0));
  }
  SUBCASE("airy window is centred at the origin") {
    const DriftModel m{DriftFamily::Airy, 2.0, 1.5};
    // only x_j with |x_j| < 1.5 enter: for particle 2 those are -1 and 0
    CHECK(drift(m, 2, c)[0] == doctest::Approx(1.0 / 3.0 + 0.5 - 2.0 * std::sqrt(1.5) / std::numbers::pi));
    CHECK(drift(m, 0, c)[0] == doctest::Approx(-1.0 - 2.0 * std::sqrt(1.5) / std::numbers::pi));
    CHECK(airy_compensator(4.0) == doctest::Approx(4.0 / std::numbers::pi));
  }
  SUBCASE("bessel") {
    const DriftModel m{DriftFamily::Bessel, 2.0, INFINITY, 3.0};
    const auto p = Configuration::line({0.5, 1.0, 3.0});
    CHECK(drift(m, 0, p)[0] == doctest::Approx(3.0 / 1.0 + (-2.0 - 0.4)));
    CHECK(drift(m, 2, p)[0] == doctest::Approx(0.5 + (0.4 + 0.5)));
    CHECK_THROWS_AS(drift(m, 0, Configuration::line({-0.5, 1.0})), DomainError);
  }
  SUBCASE("collisions") {
    CHECK_THROWS_AS(drift(dyson(), 0, Configuration::line({1.0, 1.0})), CollisionError);
    CHECK_THROWS_AS(drift(dyson(), 0, Configuration(2, {0.0, 0.0})), DomainError);
  }
}

TEST_CASE("planar drifts by hand") {
  const Configuration c(2, {0.0, 0.0, 1.0, 0.0, 0.0, 2.0});
  SUBCASE("ginibre1") {
    const DriftModel m{DriftFamily::Ginibre1, 2.0, INFINITY};
    const auto b = drift(m, 0, c);
    CHECK(b[0] == doctest::Approx(-1.0));
    CHECK(b[1] == doctest::Approx(-0.5));
    const auto t = drift({DriftFamily::Ginibre1, 2.0, 1.5}, 0, c);
    CHECK(t[0] == doctest::Approx(-1.0));
    CHECK(t[1] == 0.0);
  }
  SUBCASE("ginibre2 window is centred at the origin") {
    const DriftModel m{DriftFamily::Ginibre2, 2.0, 1.5};
    // for particle 2 at (0, 2): only X_0 and X_1 lie inside |X| < 1.5
    const auto b = drift(m, 2, c);
    CHECK(b[0] == doctest::Approx(0.0 + (0.0) + (-1.0 / 5.0)));
    CHECK(b[1] == doctest::Approx(-2.0 + 0.5 + 2.0 / 5.0));
  }
  SUBCASE("drift_all matches pointwise") {
    const DriftModel m{DriftFamily::Ginibre2, 2.0, 3.0};
    const auto all = drift_all(m, c);
    REQUIRE(all.size() == 6);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto b = drift(m, i, c);
      CHECK(all[2 * i] == b[0]);
      CHECK(all[2 * i + 1] == b[1]);
    }
  }
}

TEST_CASE("confined dyson drift is half the log-derivative of the gaussian beta density") {
  const auto c = ensembles::sample({ensembles::EnsembleFamily::GaussianBeta, 7, 1.5, 1.0, 2});
  const auto m = dyson(1.5, INFINITY, 1.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    double grad = -c.x(i);
    for (std::size_t j = 0; j < c.size(); ++j)
      if (j != i) grad += 1.5 / (c.x(i) - c.x(j));
    CHECK(drift(m, i, c)[0] == doctest::Approx(0.5 * grad).epsilon(1e-13));
  }
}

TEST_CASE("brownian source") {
  const double dt = 0.01;
  const BrownianSource src(5, 2, {0, 1, 7}, 2, dt);
  std::vector<double> a(6), b(6), l(6), r(6);
  src.root(3, a);
  src.root(3, b);
  CHECK(a == b);
  src.root(4, b);
  CHECK(a != b);
  src.split(3, 0, 0, a, l, r);
  for (int i = 0; i < 6; ++i) CHECK(l[i] + r[i] == doctest::Approx(a[i]).epsilon(1e-15));

  // streams are keyed by id, not position
  const BrownianSource one(5, 2, {7}, 2, dt);
  std::vector<double> c(2);
  one.root(3, c);
  CHECK(c[0] == a[4]);
  CHECK(c[1] == a[5]);

  // variances: root dt, each half dt/2, halves independent
  const BrownianSource big(9, 0, {0}, 1, dt);
  const int m = 40000;
  double s_root = 0, s_left = 0, s_right = 0, s_cross = 0;
  std::vector<double> p(1), ll(1), rr(1);
  for (int k = 0; k < m; ++k) {
    big.root(k, p);
    big.split(k, 0, 0, p, ll, rr);
    s_root += p[0] * p[0];
    s_left += ll[0] * ll[0];
    s_right += rr[0] * rr[0];
    s_cross += ll[0] * rr[0];
  }
  const double tol = 5 * std::sqrt(2.0 / m);
  CHECK(std::fabs(s_root / m / dt - 1.0) < tol);
  CHECK(std::fabs(s_left / m / (dt / 2) - 1.0) < tol);
  CHECK(std::fabs(s_right / m / (dt / 2) - 1.0) < tol);
  CHECK(std::fabs(s_cross / m / (dt / 2)) < tol);
}

TEST_CASE("evolve output grid and determinism") {
  const auto init = Configuration::line({-1.0, 0.2, 1.5, 3.0});
  EvolveOptions o;
  o.t_final = 0.05;
  o.dt = 1e-3;
  o.output_every = 10;
  o.seed = 4;
  const auto p = evolve(init, dyson(), o);
  CHECK(p.grid_size() == 6);
  CHECK(p.times.back() == doctest::Approx(0.05));
  CHECK(p.at(0) == init);
  const auto q = evolve(init, dyson(), o);
  CHECK(p.positions == q.positions);
  o.seed = 5;
  CHECK(evolve(init, dyson(), o).positions != p.positions);

  o.seed = 4;
  const auto many = evolve_many({init, init}, dyson(), o);
  CHECK(many[0].positions == p.positions);
  CHECK(many[1].positions != p.positions);

  o.t_final = 0.0105;
  CHECK_THROWS_AS(evolve(init, dyson(), o), DomainError);
  o.t_final = 0.05;
  CHECK_THROWS_AS(evolve(Configuration::line({0.0, 0.0}), dyson(), o), CollisionError);
  CHECK_THROWS_AS(evolve(Configuration::line({0.0, 1.0}), {DriftFamily::Bessel, 2.0, INFINITY, 1.0}, o), DomainError);
}

TEST_CASE("recorded sub-steps replay the euler update exactly") {
  // a tight pair forces halvings
  const auto init = Configuration::line({-2.0, -1.0, 0.0, 1e-3, 1.0, 2.0});
  EvolveOptions o;
  o.t_final = 0.2;
  o.dt = 0.02;
  o.record_noise = true;
  o.seed = 12;
  const auto m = dyson(2.0, INFINITY, 1.0);
  const auto p = evolve(init, m, o);
  REQUIRE(p.has_noise);
  CHECK(p.diagnostics.rejections > 0);
  double total = 0;
  for (std::size_t k = 0; k < p.steps(); ++k) {
    const Configuration before = p.step_state(k), after = p.step_state(k + 1);
    const auto b = drift_all(m, before);
    for (std::size_t i = 0; i < before.size(); ++i)
      CHECK(after.x(i) == euler_update(before.x(i), b[i], p.step_dt[k], p.increments[k * before.size() + i]));
    total += p.step_dt[k];
  }
  CHECK(total == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(p.step_state(p.steps()) == p.terminal());
  CHECK(count_invariant_violations(p, m) == 0);
}

TEST_CASE("rejection keeps order and the driving path fixed") {
  // two particles almost touching: halving is needed, labels never swap
  const auto init = Configuration::line({0.0, 1e-3, 1.0});
  EvolveOptions o;
  o.t_final = 0.1;
  o.dt = 0.01;
  o.seed = 1;
  o.record_noise = true;
  const auto p = evolve(init, dyson(), o);
  CHECK(p.diagnostics.deepest_level > 0);
  CHECK(count_invariant_violations(p, dyson()) == 0);
  for (std::size_t g = 0; g < p.grid_size(); ++g) {
    CHECK(p.coord(g, 0) < p.coord(g, 1));
    CHECK(p.coord(g, 1) < p.coord(g, 2));
  }
  // the sum of sub-step increments over a nominal step equals the root increment
  const BrownianSource src(1, 0, {0, 1, 2}, 1, 0.01);
  std::vector<double> root(3), acc(3, 0.0);
  src.root(0, root);
  double t = 0;
  for (std::size_t k = 0; k < p.steps() && t < 0.01 - 1e-15; ++k) {
    for (int i = 0; i < 3; ++i) acc[i] += p.increments[k * 3 + i];
    t += p.step_dt[k];
  }
  CHECK(t == doctest::Approx(0.01).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(acc[i] == doctest::Approx(root[i]).epsilon(1e-12));
}

TEST_CASE("bessel paths stay positive") {
  const DriftModel m{DriftFamily::Bessel, 2.0, INFINITY, 1.0};
  EvolveOptions o;
  o.t_final = 0.5;
  o.dt = 1e-2;
  o.seed = 8;
  const auto p = evolve(Configuration::line({0.05, 0.4, 1.0}), m, o);
  CHECK(count_invariant_violations(p, m) == 0);
  for (std::size_t g = 0; g < p.grid_size(); ++g) CHECK(p.coord(g, 0) > 0.0);
}

TEST_CASE("underflow is reported when dt_min is too coarse") {
  // strong confinement: x -> (1 - kappa dt / 2) x flips the order until dt is halved twice
  const auto m = dyson(2.0, INFINITY, 100.0);
  EvolveOptions o;
  o.t_final = 0.1;
  o.dt = 0.05;
  o.max_halvings = 0;
  o.seed = 3;
  CHECK_THROWS_AS(evolve(Configuration::line({0.0, 5.0}), m, o), StepUnderflowError);
  o.max_halvings = 4;
  const auto p = evolve(Configuration::line({0.0, 5.0}), m, o);
  CHECK(p.diagnostics.deepest_level >= 2);
  CHECK(count_invariant_violations(p, m) == 0);
}

TEST_CASE("confined dyson keeps the gaussian ensemble in equilibrium") {
  // E sum x^2 = N^2 for GUE; check it is unchanged after evolution
  const int n = 5;
  const std::size_t reps = 2000;
  const auto init = ensembles::sample_many({ensembles::EnsembleFamily::GaussianBeta, n, 2.0, 1.0, 41}, reps);
  EvolveOptions o;
  o.t_final = 1.0;
  o.dt = 1e-3;
  o.output_every = 1000;
  o.seed = 41;
  const auto paths = evolve_many(init, dyson(2.0, INFINITY, 1.0), o);
  double s = 0;
  for (const auto& p : paths) {
    const auto c = p.terminal();
    for (double v : c.coords()) s += v * v;
  }
  // variance of sum x^2 is 2 N^2
  CHECK(std::fabs(s / reps - n * n) < 5 * std::sqrt(2.0 * n * n / reps));
}

TEST_CASE("planar jump test rejects large moves") {
  const DriftModel m{DriftFamily::Ginibre2, 2.0, INFINITY};
  EvolveOptions o;
  o.t_final = 0.2;
  o.dt = 0.05;
  o.seed = 2;
  o.max_jump_fraction = 0.5;
  const auto p = evolve(Configuration(2, {0.0, 0.0, 0.05, 0.0, 2.0, 1.0}), m, o);
  CHECK(p.diagnostics.rejections > 0);
  CHECK(count_invariant_violations(p, m) == 0);
}
