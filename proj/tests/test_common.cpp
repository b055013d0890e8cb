#include <atomic>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "ibmlab/common.hpp"
#include "ibmlab/quadrature.hpp"
#include "ibmlab/rng.hpp"

using namespace ibmlab;

TEST_CASE("philox4x32-10 known-answer vectors") {
  const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero[0] == 0x6627e8d5u);
  CHECK(zero[1] == 0xe169c58du);
  CHECK(zero[2] == 0xbc57ac4cu);
  CHECK(zero[3] == 0x9b00dbd8u);

  const auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(pi[0] == 0xd16cfe09u);
  CHECK(pi[1] == 0x94fdccebu);
  CHECK(pi[2] == 0x5001e420u);
  CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("derived keys are distinct across replicas and streams") {
  std::set<std::uint64_t> keys;
  for (std::uint64_t a = 0; a < 64; ++a)
    for (std::uint64_t b = 0; b < 64; ++b) keys.insert(derive_key(7, a, b));
  CHECK(keys.size() == 64 * 64);
  CHECK(derive_key(1, 2, 3) == derive_key(1, 2, 3));
  CHECK(derive_key(1, 2, 3) != derive_key(2, 2, 3));
}

TEST_CASE("counter stream normals are a pure function of the counter") {
  CounterStream s(derive_key(3, 1));
  const auto a = s.normal_pair(17, 2, 5);
  const auto b = s.normal_pair(17, 2, 5);
  CHECK(a == b);
  CHECK(s.normal_pair(18, 2, 5) != a);
}

TEST_CASE("philox engine moments") {
  PhiloxEngine eng(derive_key(11, 0));
  const int n = 200000;
  double m1 = 0, m2 = 0, u1 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = eng.normal();
    m1 += z;
    m2 += z * z;
    const double u = eng.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    u1 += u;
  }
  CHECK(std::fabs(m1 / n) < 5.0 / std::sqrt(double(n)));
  CHECK(std::fabs(m2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::fabs(u1 / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));

  // E chi_k^2 = k
  for (double k : {0.5, 3.0, 10.0}) {
    double s = 0;
    const int m = 50000;
    for (int i = 0; i < m; ++i) {
      const double c = eng.chi(k);
      s += c * c;
    }
    CHECK(std::fabs(s / m - k) < 5.0 * std::sqrt(2.0 * k / m));
  }
  CHECK(eng.chi(0.0) == 0.0);
}

TEST_CASE("philox engine is reproducible for equal keys") {
  PhiloxEngine a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly") {
  for (int n : {1, 2, 5, 12, 40}) {
    const auto [x, w] = gauss_legendre(n);
    REQUIRE(x.size() == static_cast<std::size_t>(n));
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double q = 0;
      for (int i = 0; i < n; ++i) q += w[i] * std::pow(x[i], deg);
      const double exact = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1);
      CHECK(q == doctest::Approx(exact).epsilon(1e-13));
    }
    for (int i = 1; i < n; ++i) CHECK(x[i] > x[i - 1]);
  }
}

TEST_CASE("quadrature grids on interval unions") {
  const auto g = gauss_legendre_grid({{0.0, 1.0}, {2.0, 2.0}, {3.0, 5.0}}, 8);
  CHECK(g.size() == 16);
  g.validate();
  double len = 0, integral = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    len += g.weights[i];
    integral += g.weights[i] * std::exp(g.nodes[i]);
  }
  CHECK(len == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(integral == doctest::Approx(std::exp(1.0) - 1.0 + std::exp(5.0) - std::exp(3.0)).epsilon(1e-13));

  const auto c = composite_gauss_legendre(-2.0, 7.0, 0.5, 6);
  c.validate();
  double s = 0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c.weights[i] * std::sin(c.nodes[i]);
  CHECK(s == doctest::Approx(std::cos(-2.0) - std::cos(7.0)).epsilon(1e-13));

  QuadratureGrid bad{{0.0, 1.0}, {1.0, -1.0}, {{0.0, 1.0}}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("configuration layout and minimum gap") {
  const Configuration line = Configuration::line({3.0, -1.0, 0.5});
  CHECK(line.size() == 3);
  CHECK(line.dim() == 1);
  CHECK(min_gap(line) == doctest::Approx(1.5));
  const Configuration plane(2, {0.0, 0.0, 3.0, 4.0, 0.0, 1.0});
  CHECK(plane.size() == 3);
  CHECK(plane.y(1) == 4.0);
  CHECK(min_gap(plane) == doctest::Approx(1.0));
  CHECK(std::isinf(min_gap(Configuration::line({1.0}))));
  CHECK_THROWS_AS(Configuration(3, {1.0, 2.0, 3.0}), DomainError);
  CHECK_THROWS_AS(Configuration(2, {1.0, 2.0, 3.0}), DomainError);
}

TEST_CASE("parallel_for visits each index once and propagates errors") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 1000);
  CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 7) throw DomainError("boom");
                  }),
                  DomainError);
  parallel_for(0, [](std::size_t) { FAIL("no work expected"); });
}
