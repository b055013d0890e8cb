#include "ibmlab/quadrature.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "ibmlab/common.hpp"

namespace ibmlab {

void QuadratureGrid::validate() const {
  if (nodes.size() != weights.size()) throw DomainError("quadrature: node/weight size mismatch");
  for (double w : weights)
    if (!(w > 0.0)) throw DomainError("quadrature: weights must be strictly positive");
  std::size_t k = 0;
  for (const auto& iv : domain) {
    double prev = -std::numeric_limits<double>::infinity();
    for (; k < nodes.size() && nodes[k] >= iv.lo && nodes[k] <= iv.hi; ++k) {
      if (!(nodes[k] > prev)) throw DomainError("quadrature: nodes not strictly increasing");
      prev = nodes[k];
    }
  }
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: order must be >= 1");
  static std::mutex cache_mutex;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  {
    std::lock_guard lock(cache_mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }

  std::vector<double> x(n), w(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th root from the right.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;

  std::lock_guard lock(cache_mutex);
  cache.emplace(n, std::make_pair(x, w));
  return {std::move(x), std::move(w)};
}

QuadratureGrid gauss_legendre_grid(const std::vector<Interval>& domain, int n) {
  QuadratureGrid g;
  const auto [x, w] = gauss_legendre(n);
  for (const auto& iv : domain) {
    if (!(iv.hi >= iv.lo)) throw DomainError("quadrature: interval with hi < lo");
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) throw DomainError("quadrature: unbounded interval");
    if (iv.hi == iv.lo) continue;
    const double mid = 0.5 * (iv.hi + iv.lo);
    const double rad = 0.5 * (iv.hi - iv.lo);
    for (int k = 0; k < n; ++k) {
      g.nodes.push_back(mid + rad * x[k]);
      g.weights.push_back(rad * w[k]);
    }
    g.domain.push_back(iv);
  }
  return g;
}

QuadratureGrid composite_gauss_legendre(double lo, double hi, double max_panel, int n) {
  if (hi <= lo) return {};
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_panel)));
  const double h = (hi - lo) / panels;
  std::vector<Interval> ivs;
  ivs.reserve(panels);
  for (int p = 0; p < panels; ++p) ivs.push_back({lo + p * h, p + 1 == panels ? hi : lo + (p + 1) * h});
  return gauss_legendre_grid(ivs, n);
}

}  // namespace ibmlab
