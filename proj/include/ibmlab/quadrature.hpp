#pragma once

#include <utility>
#include <vector>

namespace ibmlab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Nodes and strictly positive weights on a union of intervals; nodes are
/// strictly increasing within each interval.
struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<Interval> domain;

  std::size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }
  /// Throws DomainError when the invariants are broken.
  void validate() const;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on the Legendre recurrence).
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

/// n nodes per interval; empty or zero-length intervals contribute nothing.
QuadratureGrid gauss_legendre_grid(const std::vector<Interval>& domain, int n);

/// Composite rule: [lo, hi] split into panels of width <= max_panel, n nodes each.
QuadratureGrid composite_gauss_legendre(double lo, double hi, double max_panel, int n);

}  // namespace ibmlab
