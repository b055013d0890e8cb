#include "ibmlab/kernels.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/airy.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ibmlab/common.hpp"

namespace ibmlab::kernels {

namespace {

constexpr double kPi = std::numbers::pi;
// max over the real line of |Ai|, attained near x = -1.0188
constexpr double kAiryAbsMax = 0.5357;
constexpr double kDiagonalSwitch = 1e-6;

double airy_ai_only(double x) { return x > kAiryUnderflowX ? 0.0 : boost::math::airy_ai(x); }

// Smallest z >= 2 with the bound  max|Ai| * int_z^inf Ai  below tol.
double positive_tail_cutoff(double tol) {
  double z = 2.0;
  while (z < 60.0 && kAiryAbsMax * airy_ai_only(z) / std::sqrt(z) > tol) z += 0.25;
  return z;
}

// Panels over [lo, hi] narrow enough to hold about one period of
// Ai(u+x)Ai(u+y); the product oscillates with phase rate near sqrt|u+x| + sqrt|u+y|.
void append_airy_panels(double lo, double hi, double spread, int nodes, std::vector<double>& u,
                        std::vector<double>& w) {
  const auto [gx, gw] = gauss_legendre(nodes);
  double a = lo;
  while (a < hi) {
    const double reach = std::max(std::fabs(a), std::fabs(hi)) + spread + 1.0;
    const double h = std::min({1.0, kPi / std::sqrt(reach), hi - a});
    const double b = (hi - a - h < 1e-12) ? hi : a + h;
    const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
    for (int k = 0; k < nodes; ++k) {
      u.push_back(mid + rad * gx[k]);
      w.push_back(rad * gw[k]);
    }
    a = b;
  }
}

struct AiryRule {
  std::vector<double> u;
  std::vector<double> w;  // includes exp(-u (t-s)/2) and the branch sign
};

AiryRule extended_airy_rule(double s, double t, double xmin, double xmax, const ExtendedAiryOptions& opts) {
  AiryRule rule;
  const double spread = std::max(std::fabs(xmin), std::fabs(xmax));
  if (t >= s) {
    const double delta = t - s;
    const double upper = std::max(0.0, positive_tail_cutoff(opts.tail_tolerance) - xmin);
    append_airy_panels(0.0, upper, spread, opts.nodes_per_panel, rule.u, rule.w);
    for (std::size_t k = 0; k < rule.u.size(); ++k) rule.w[k] *= std::exp(-rule.u[k] * delta / 2.0);
    return rule;
  }
  const double delta = s - t;
  // int_{-inf}^{-U} e^{u delta/2} |Ai Ai| du <= max|Ai|^2 (2/delta) e^{-U delta/2}
  const double scale = 2.0 * kAiryAbsMax * kAiryAbsMax / delta;
  const double extent = (2.0 / delta) * std::log(std::max(1.0, scale / opts.tail_tolerance));
  if (extent > opts.max_negative_extent) {
    const double bound = scale * std::exp(-opts.max_negative_extent * delta / 2.0);
    std::ostringstream msg;
    msg << "extended Airy kernel: t < s branch with s - t = " << delta << " needs |u| up to " << extent
        << " (limit " << opts.max_negative_extent << "); tail bound at the limit is " << bound;
    throw DivergenceError(msg.str(), bound);
  }
  append_airy_panels(-extent, 0.0, spread, opts.nodes_per_panel, rule.u, rule.w);
  for (std::size_t k = 0; k < rule.u.size(); ++k) rule.w[k] *= -std::exp(rule.u[k] * delta / 2.0);
  return rule;
}

std::vector<double> extended_airy_matrix(double s, const std::vector<double>& xs, double t,
                                         const std::vector<double>& ys, const ExtendedAiryOptions& opts) {
  std::vector<double> out(xs.size() * ys.size(), 0.0);
  if (xs.empty() || ys.empty()) return out;
  const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
  const auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
  const AiryRule rule = extended_airy_rule(s, t, std::min(*xlo, *ylo), std::max(*xhi, *yhi), opts);
  const Eigen::Index nq = static_cast<Eigen::Index>(rule.u.size());
  if (nq == 0) return out;

  auto tabulate = [&](const std::vector<double>& pts, bool weighted) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), nq);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index k = 0; k < nq; ++k)
        m(i, k) = airy_ai_only(rule.u[k] + pts[i]) * (weighted ? rule.w[k] : 1.0);
    return m;
  };
  const Eigen::MatrixXd a = tabulate(xs, true);
  const Eigen::MatrixXd b = tabulate(ys, false);
  const Eigen::MatrixXd k = a * b.transpose();
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) out[i * ys.size() + j] = k(i, j);
  return out;
}

double bessel_j(double nu, double z) { return std::cyl_bessel_j(nu, z); }

// d/dz J_nu(z) = (nu/z) J_nu(z) - J_{nu+1}(z)
double bessel_j_prime(double nu, double z) { return (nu / z) * bessel_j(nu, z) - bessel_j(nu + 1.0, z); }

void check_equal_time(const KernelSpec& spec, double s, double t) {
  if (s != t) throw DomainError(to_string(spec.family) + " kernel is equal-time; s and t must coincide");
}

}  // namespace

AiryValue airy_fn(double x) {
  if (!std::isfinite(x)) throw DomainError("airy_fn: argument must be finite");
  if (x > kAiryUnderflowX) return {0.0, 0.0, true};
  return {boost::math::airy_ai(x), boost::math::airy_ai_prime(x), false};
}

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Sine: return "sine";
    case KernelFamily::Airy: return "airy";
    case KernelFamily::ExtendedAiry: return "extended-airy";
    case KernelFamily::Bessel: return "bessel";
    case KernelFamily::Ginibre: return "ginibre";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  for (auto f : {KernelFamily::Sine, KernelFamily::Airy, KernelFamily::ExtendedAiry, KernelFamily::Bessel,
                 KernelFamily::Ginibre})
    if (to_string(f) == name) return f;
  throw DomainError("unknown kernel family '" + name + "'");
}

void KernelSpec::validate() const {
  if (family == KernelFamily::Bessel && !(bessel_a >= 1.0))
    throw DomainError("Bessel kernel requires a >= 1 (got " + std::to_string(bessel_a) + ")");
}

double sine_kernel(double x, double y) {
  const double d = x - y;
  if (d == 0.0) return 1.0;
  return std::sin(kPi * d) / (kPi * d);
}

double airy_kernel(double x, double y) {
  if (std::fabs(x - y) <= kDiagonalSwitch) {
    const double m = 0.5 * (x + y);
    const AiryValue a = airy_fn(m);
    return a.ai_prime * a.ai_prime - m * a.ai * a.ai;
  }
  const AiryValue ax = airy_fn(x), ay = airy_fn(y);
  return (ax.ai * ay.ai_prime - ax.ai_prime * ay.ai) / (x - y);
}

double bessel_kernel(double order, double x, double y) {
  if (x < 0.0 || y < 0.0) throw DomainError("Bessel kernel is defined on [0, inf)");
  if (std::fabs(x - y) <= kDiagonalSwitch) {
    const double m = 0.5 * (x + y);
    if (m == 0.0) return order == 0.0 ? 0.25 : 0.0;
    const double z = std::sqrt(m);
    const double jn = bessel_j(order, z), jp = bessel_j(order + 1.0, z);
    const double jm = (2.0 * order / z) * jn - jp;  // J_{nu-1}
    return 0.25 * (jn * jn - jp * jm);
  }
  const double sx = std::sqrt(x), sy = std::sqrt(y);
  const double jx = bessel_j(order, sx), jy = bessel_j(order, sy);
  const double dx = sx == 0.0 ? 0.0 : sx * bessel_j_prime(order, sx);
  const double dy = sy == 0.0 ? 0.0 : sy * bessel_j_prime(order, sy);
  return (jx * dy - dx * jy) / (2.0 * (x - y));
}

std::complex<double> ginibre_kernel(std::complex<double> z, std::complex<double> w) {
  return std::exp(z * std::conj(w) - 0.5 * std::norm(z) - 0.5 * std::norm(w)) / kPi;
}

double eval_kernel(const KernelSpec& spec, double s, double x, double t, double y, const ExtendedAiryOptions& opts) {
  spec.validate();
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(s) || !std::isfinite(t))
    throw DomainError("eval_kernel: arguments must be finite");
  switch (spec.family) {
    case KernelFamily::Sine:
      check_equal_time(spec, s, t);
      return sine_kernel(x, y);
    case KernelFamily::Airy:
      check_equal_time(spec, s, t);
      return airy_kernel(x, y);
    case KernelFamily::Bessel:
      check_equal_time(spec, s, t);
      return bessel_kernel(spec.bessel_a - 1.0, x, y);
    case KernelFamily::Ginibre:
      check_equal_time(spec, s, t);
      return ginibre_kernel({x, 0.0}, {y, 0.0}).real();
    case KernelFamily::ExtendedAiry:
      return extended_airy_matrix(s, {x}, t, {y}, opts)[0];
  }
  throw DomainError("eval_kernel: unknown family");
}

std::vector<double> kernel_matrix(const KernelSpec& spec, double s, const std::vector<double>& xs, double t,
                                  const std::vector<double>& ys, const ExtendedAiryOptions& opts) {
  spec.validate();
  if (spec.family == KernelFamily::ExtendedAiry) return extended_airy_matrix(s, xs, t, ys, opts);
  std::vector<double> out(xs.size() * ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) out[i * ys.size() + j] = eval_kernel(spec, s, xs[i], t, ys[j], opts);
  return out;
}

std::vector<double> nystrom_matrix(const KernelSpec& spec, const QuadratureGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> k = kernel_matrix(spec, 0.0, grid.nodes, 0.0, grid.nodes);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k[i * n + j] *= std::sqrt(grid.weights[i] * grid.weights[j]);
  return k;
}

// ---------------------------------------------------------------------------

namespace {

double determinant_of(const std::vector<double>& kmat, const QuadratureGrid& grid, const std::vector<double>& chi) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (n == 0) return 1.0;
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = (i == j ? 1.0 : 0.0) + kmat[i * n + j] * chi[j] * grid.weights[j];
  return m.partialPivLu().determinant();
}

std::vector<double> eval_chi(const ScalarFn& chi, const QuadratureGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = chi(grid.nodes[i]);
    if (!std::isfinite(out[i])) throw DomainError("fredholm_det: chi must be bounded");
  }
  return out;
}

template <typename DetAt>
FredholmResult refine(const DetAt& det_at, int grid_order, double tol, const char* what) {
  if (grid_order < 4) throw DomainError(std::string(what) + ": grid_order must be >= 4");
  const double coarse = det_at(grid_order);
  const double fine = det_at(2 * grid_order);
  FredholmResult r{fine, std::fabs(fine - coarse), 2 * grid_order};
  if (!(r.refinement_error <= tol)) {
    std::ostringstream msg;
    msg << what << ": not converged, order " << grid_order << " gives " << coarse << ", order " << 2 * grid_order
        << " gives " << fine << " (tolerance " << tol << ")";
    throw ConvergenceError(msg.str(), coarse, fine);
  }
  return r;
}

void check_domain(const std::vector<Interval>& domain) {
  for (const auto& iv : domain)
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.hi < iv.lo)
      throw DomainError("fredholm_det: domain intervals must be bounded with lo <= hi");
}

}  // namespace

double fredholm_det_on_grid(const KernelFn& kernel, const QuadratureGrid& grid, const ScalarFn& chi) {
  const std::size_t n = grid.size();
  std::vector<double> kmat(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) kmat[i * n + j] = kernel(grid.nodes[i], grid.nodes[j]);
  return determinant_of(kmat, grid, eval_chi(chi, grid));
}

FredholmResult fredholm_det(const KernelFn& kernel, const std::vector<Interval>& domain, int grid_order,
                            const ScalarFn& chi, double tol) {
  check_domain(domain);
  return refine(
      [&](int order) { return fredholm_det_on_grid(kernel, gauss_legendre_grid(domain, order), chi); }, grid_order,
      tol, "fredholm_det");
}

FredholmResult fredholm_det(const KernelSpec& spec, const std::vector<Interval>& domain, int grid_order,
                            const ScalarFn& chi, double tol) {
  spec.validate();
  check_domain(domain);
  return refine(
      [&](int order) {
        const QuadratureGrid grid = gauss_legendre_grid(domain, order);
        return determinant_of(kernel_matrix(spec, 0.0, grid.nodes, 0.0, grid.nodes), grid, eval_chi(chi, grid));
      },
      grid_order, tol, "fredholm_det");
}

FredholmResult multitime_mgf(const std::vector<double>& times, const std::vector<Interval>& domain, int grid_order,
                             const std::vector<ScalarFn>& chi_per_time, double tol, const ExtendedAiryOptions& opts) {
  if (times.empty() || times.size() > 4) throw DomainError("multitime_mgf: between 1 and 4 times are supported");
  if (chi_per_time.size() != times.size()) throw DomainError("multitime_mgf: one chi per time is required");
  check_domain(domain);

  auto det_at = [&](int order) {
    const QuadratureGrid grid = gauss_legendre_grid(domain, order);
    const auto n = static_cast<Eigen::Index>(grid.size());
    const auto nt = static_cast<Eigen::Index>(times.size());
    if (n == 0) return 1.0;
    std::vector<std::vector<double>> chis;
    for (const auto& c : chi_per_time) chis.push_back(eval_chi(c, grid));
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n * nt, n * nt);
    for (Eigen::Index a = 0; a < nt; ++a)
      for (Eigen::Index b = 0; b < nt; ++b) {
        const auto block = extended_airy_matrix(times[a], grid.nodes, times[b], grid.nodes, opts);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < n; ++j)
            m(a * n + i, b * n + j) += block[i * n + j] * chis[b][j] * grid.weights[j];
      }
    return m.partialPivLu().determinant();
  };
  return refine(det_at, grid_order, tol, "multitime_mgf");
}

}  // namespace ibmlab::kernels
