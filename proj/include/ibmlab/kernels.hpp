#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "ibmlab/common.hpp"
#include "ibmlab/quadrature.hpp"

namespace ibmlab::kernels {

struct AiryValue {
  double ai = 0.0;
  double ai_prime = 0.0;
  /// Set when x is past the underflow threshold and zeros were returned.
  bool underflow = false;
};

/// Arguments above this return {0, 0, underflow = true}.
inline constexpr double kAiryUnderflowX = 100.0;

/// Airy function of the first kind and its derivative.
AiryValue airy_fn(double x);

enum class KernelFamily { Sine, Airy, ExtendedAiry, Bessel, Ginibre };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& name);

struct KernelSpec {
  KernelFamily family = KernelFamily::Sine;
  /// Bessel parameter a >= 1; the kernel order is a - 1.
  double bessel_a = 1.0;

  static KernelSpec sine() { return {KernelFamily::Sine}; }
  static KernelSpec airy() { return {KernelFamily::Airy}; }
  static KernelSpec extended_airy() { return {KernelFamily::ExtendedAiry}; }
  static KernelSpec bessel(double a) { return {KernelFamily::Bessel, a}; }
  static KernelSpec ginibre() { return {KernelFamily::Ginibre}; }

  void validate() const;
  bool is_planar() const { return family == KernelFamily::Ginibre; }
};

/// Options for the semi-infinite integrals of the extended Airy kernel.
struct ExtendedAiryOptions {
  /// Tail mass allowed beyond the truncation point.
  double tail_tolerance = 1e-12;
  /// Largest |u| accepted for the t < s branch before it is declared divergent.
  double max_negative_extent = 1000.0;
  int nodes_per_panel = 24;
};

/// The t < s branch needs more range than allowed. `tail_bound` is the
/// bound on the neglected tail at the maximum extent.
class DivergenceError : public DomainError {
 public:
  DivergenceError(const std::string& what, double tail_bound) : DomainError(what), tail_bound_(tail_bound) {}
  double tail_bound() const { return tail_bound_; }

 private:
  double tail_bound_;
};

/// Kernel value for 1-D families. Equal-time families require s == t.
/// For Ginibre, x and y are taken on the real axis and the (real) value
/// of the planar kernel is returned.
double eval_kernel(const KernelSpec& spec, double s, double x, double t, double y,
                   const ExtendedAiryOptions& opts = {});

/// Planar Ginibre kernel exp(z conj(w) - |z|^2/2 - |w|^2/2) / pi.
std::complex<double> ginibre_kernel(std::complex<double> z, std::complex<double> w);

/// Kernel matrix K(s, xs[i]; t, ys[j]). For the extended Airy family the
/// Airy values on the shared quadrature nodes are reused across entries.
std::vector<double> kernel_matrix(const KernelSpec& spec, double s, const std::vector<double>& xs, double t,
                                  const std::vector<double>& ys, const ExtendedAiryOptions& opts = {});

/// Equal-time closed forms, exposed for cross-checks.
double sine_kernel(double x, double y);
double airy_kernel(double x, double y);
double bessel_kernel(double order, double x, double y);

// ---------------------------------------------------------------------------
// Fredholm determinants

using ScalarFn = std::function<double(double)>;
using KernelFn = std::function<double(double, double)>;

struct FredholmResult {
  double value = 1.0;
  /// |det(order 2n) - det(order n)|.
  double refinement_error = 0.0;
  int order = 0;
};

/// det(I + K chi) on a Nystrom grid, no refinement.
double fredholm_det_on_grid(const KernelFn& kernel, const QuadratureGrid& grid, const ScalarFn& chi);

/// Evaluates at grid_order and 2*grid_order nodes per interval and returns
/// the finer value; throws ConvergenceError when they differ by more than tol.
FredholmResult fredholm_det(const KernelFn& kernel, const std::vector<Interval>& domain, int grid_order,
                            const ScalarFn& chi, double tol = 1e-6);

FredholmResult fredholm_det(const KernelSpec& spec, const std::vector<Interval>& domain, int grid_order,
                            const ScalarFn& chi, double tol = 1e-6);

/// Block Fredholm determinant over times t_1..t_M (extended Airy only):
/// Det[delta_st delta(x-y) + K(s,x;t,y) chi_t(y)].
FredholmResult multitime_mgf(const std::vector<double>& times, const std::vector<Interval>& domain, int grid_order,
                             const std::vector<ScalarFn>& chi_per_time, double tol = 1e-6,
                             const ExtendedAiryOptions& opts = {});

/// Symmetrized Nystrom matrix sqrt(w_i) K(x_i, x_j) sqrt(w_j) of an
/// equal-time 1-D kernel; used for spectral checks.
std::vector<double> nystrom_matrix(const KernelSpec& spec, const QuadratureGrid& grid);

}  // namespace ibmlab::kernels
