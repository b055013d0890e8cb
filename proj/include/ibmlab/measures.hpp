#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ibmlab/dynamics.hpp"
#include "ibmlab/ensembles.hpp"

namespace ibmlab::measures {

/// Free potential Phi and logarithmic pair potential Psi(x, y) = -beta log|x - y|.
struct PotentialPair {
  enum class Free { None, Quadratic };
  Free phi = Free::Quadratic;
  /// Phi(x) = coefficient * x^2 / 2 for Free::Quadratic.
  double coefficient = 1.0;
  double beta = 2.0;

  double free_potential(double x) const { return phi == Free::Quadratic ? 0.5 * coefficient * x * x : 0.0; }
  double pair_potential(double x, double y) const;
  /// H_r = sum Phi(x_i) + sum_{i<j} Psi(x_i, x_j) over the given points.
  double hamiltonian(std::span<const double> points) const;
  /// exp(-H_r), evaluated as a product so coincident points give 0 (beta > 0).
  double boltzmann_weight(std::span<const double> points) const;

  /// Potentials of the Gaussian beta ensemble.
  static PotentialPair gaussian(double beta) { return {Free::Quadratic, 1.0, beta}; }
};

/// d(x, s) with  int grad f dmu^[1] = - int f d dmu^[1]. With unit
/// diffusion matrix it equals twice the drift, and is computed that way.
class LogDerivativeField {
 public:
  explicit LogDerivativeField(dynamics::DriftModel model);

  /// Field of the finite-N Gaussian beta ensemble: Dyson, r = inf,
  /// confinement 1, i.e. d(x) = -x + beta sum 1/(x - s_j).
  static LogDerivativeField for_ensemble(const ensembles::EnsembleSpec& spec);

  const dynamics::DriftModel& model() const { return model_; }
  dynamics::DriftVec operator()(std::size_t i, const Configuration& config) const;

 private:
  dynamics::DriftModel model_;
};

/// Smooth scalar test function with bounded support [lo, hi].
struct TestFunction {
  std::function<double(double)> value;
  std::function<double(double)> gradient;
  double lo = 0.0;
  double hi = 0.0;

  bool in_support(double x) const { return x > lo && x < hi; }

  /// exp(-(x-c)^2 / (2 w^2)), cut at |x - c| = 12 w where it is below 1e-31.
  static TestFunction gaussian_bump(double center, double width);
  /// exp(1 - 1/(1 - u^2)), u = (x - c)/R, supported on (c - R, c + R).
  static TestFunction compact_bump(double center, double radius);
  static TestFunction zero();

  TestFunction operator+(const TestFunction& other) const;
};

struct IbpResult {
  double lhs = 0.0;  // E sum_i grad f(x_i)
  double rhs = 0.0;  // -E sum_i f(x_i) d(x_i, s - x_i)
  double std_error = 0.0;  // standard error of lhs - rhs
  std::size_t replicas = 0;
  bool inconclusive = false;  // std_error > |lhs|
};

/// Monte Carlo check of the integration-by-parts identity over the
/// 1-Campbell measure, using the point-sum representation. 1-D only.
IbpResult verify_ibp(const ensembles::EnsembleSpec& ensemble, const LogDerivativeField& field, const TestFunction& f,
                     std::size_t replicas);

/// Finite-volume quasi-Gibbs diagnostic. For each sample with exactly m
/// points in (-r, r) the corrected log-density
///   log p(inside | outside) + H_r(inside)
/// is evaluated on a product Gauss-Legendre grid; its spread per sample is
/// log(c^2) for the two-sided bound c^-1 e^{-H_r} <= mu <= c e^{-H_r}.
struct QuasiGibbsResult {
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  std::vector<double> spreads;  // one per conditioned sample
  double spread_q10 = 0.0;
  double spread_q50 = 0.0;
  double spread_q90 = 0.0;
  double spread_max = 0.0;
  std::size_t samples_drawn = 0;
};

/// Gaussian beta ensembles only (beta = 0 allowed). Throws Error when no
/// sample has exactly m points inside.
QuasiGibbsResult quasi_gibbs_ratio(const ensembles::EnsembleSpec& ensemble, double r, std::size_t m,
                                   std::size_t samples, int grid_order = 16);

}  // namespace ibmlab::measures
