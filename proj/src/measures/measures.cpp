#include "ibmlab/measures.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

#include "ibmlab/quadrature.hpp"

namespace ibmlab::measures {

using dynamics::DriftFamily;
using dynamics::DriftModel;
using ensembles::EnsembleFamily;
using ensembles::EnsembleSpec;

double PotentialPair::pair_potential(double x, double y) const { return -beta * std::log(std::fabs(x - y)); }

double PotentialPair::hamiltonian(std::span<const double> pts) const {
  double h = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    h += free_potential(pts[i]);
    for (std::size_t j = i + 1; j < pts.size(); ++j) h += pair_potential(pts[i], pts[j]);
  }
  return h;
}

double PotentialPair::boltzmann_weight(std::span<const double> pts) const {
  double w = 1.0;
  double free = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    free += free_potential(pts[i]);
    for (std::size_t j = i + 1; j < pts.size(); ++j) w *= std::pow(std::fabs(pts[i] - pts[j]), beta);
  }
  return w * std::exp(-free);
}

LogDerivativeField::LogDerivativeField(DriftModel model) : model_(model) { model_.validate(); }

LogDerivativeField LogDerivativeField::for_ensemble(const EnsembleSpec& spec) {
  if (spec.family != EnsembleFamily::GaussianBeta)
    throw DomainError("logarithmic derivative: only the Gaussian beta ensemble has a drift counterpart");
  DriftModel m;
  m.family = DriftFamily::Dyson;
  m.beta = spec.beta;
  m.confinement = 1.0;
  return LogDerivativeField(m);
}

dynamics::DriftVec LogDerivativeField::operator()(std::size_t i, const Configuration& config) const {
  const dynamics::DriftVec b = dynamics::drift(model_, i, config);
  return {2.0 * b[0], 2.0 * b[1]};
}

TestFunction TestFunction::gaussian_bump(double c, double w) {
  if (!(w > 0.0)) throw DomainError("gaussian_bump: width must be > 0");
  TestFunction f;
  f.value = [c, w](double x) {
    const double u = (x - c) / w;
    return std::fabs(u) >= 12.0 ? 0.0 : std::exp(-0.5 * u * u);
  };
  f.gradient = [c, w](double x) {
    const double u = (x - c) / w;
    return std::fabs(u) >= 12.0 ? 0.0 : -u / w * std::exp(-0.5 * u * u);
  };
  f.lo = c - 12.0 * w;
  f.hi = c + 12.0 * w;
  return f;
}

TestFunction TestFunction::compact_bump(double c, double radius) {
  if (!(radius > 0.0)) throw DomainError("compact_bump: radius must be > 0");
  TestFunction f;
  f.value = [c, radius](double x) {
    const double u = (x - c) / radius;
    return std::fabs(u) >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - u * u));
  };
  f.gradient = [c, radius](double x) {
    const double u = (x - c) / radius;
    if (std::fabs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    return std::exp(1.0 - 1.0 / q) * (-2.0 * u / (q * q)) / radius;
  };
  f.lo = c - radius;
  f.hi = c + radius;
  return f;
}

TestFunction TestFunction::zero() {
  TestFunction f;
  f.value = [](double) { return 0.0; };
  f.gradient = [](double) { return 0.0; };
  return f;
}

TestFunction TestFunction::operator+(const TestFunction& other) const {
  TestFunction f;
  f.value = [a = value, b = other.value](double x) { return a(x) + b(x); };
  f.gradient = [a = gradient, b = other.gradient](double x) { return a(x) + b(x); };
  f.lo = std::min(lo, other.lo);
  f.hi = std::max(hi, other.hi);
  return f;
}

IbpResult verify_ibp(const EnsembleSpec& ensemble, const LogDerivativeField& field, const TestFunction& f,
                     std::size_t replicas) {
  ensemble.validate();
  if (ensemble.dim() != 1 || field.model().dim() != 1) throw DomainError("verify_ibp: 1-D ensembles only");
  if (replicas < 2) throw DomainError("verify_ibp: at least two replicas are needed");
  if (!(f.hi > f.lo) && f.lo != 0.0) throw DomainError("verify_ibp: test function support must be bounded");

  std::vector<double> grad_sum(replicas), field_sum(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    const Configuration c = ensembles::sample(ensemble, r);
    double g = 0.0, fd = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double x = c.x(i);
      if (!f.in_support(x)) continue;
      g += f.gradient(x);
      const double fx = f.value(x);
      if (fx != 0.0) fd += fx * field(i, c)[0];
    }
    grad_sum[r] = g;
    field_sum[r] = fd;
  });

  double mean_g = 0.0, mean_fd = 0.0, mean_diff = 0.0, m2 = 0.0;
  for (std::size_t r = 0; r < replicas; ++r) {
    const double k = static_cast<double>(r + 1);
    mean_g += (grad_sum[r] - mean_g) / k;
    mean_fd += (field_sum[r] - mean_fd) / k;
    const double diff = grad_sum[r] + field_sum[r];
    const double delta = diff - mean_diff;
    mean_diff += delta / k;
    m2 += delta * (diff - mean_diff);
  }
  IbpResult out;
  out.lhs = mean_g;
  out.rhs = -mean_fd;
  out.replicas = replicas;
  out.std_error = std::sqrt(m2 / static_cast<double>(replicas - 1) / static_cast<double>(replicas));
  out.inconclusive = out.std_error > std::fabs(out.lhs);
  return out;
}

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

QuasiGibbsResult quasi_gibbs_ratio(const EnsembleSpec& ensemble, double r, std::size_t m, std::size_t samples,
                                   int grid_order) {
  ensemble.validate();
  if (ensemble.family != EnsembleFamily::GaussianBeta)
    throw DomainError("quasi_gibbs_ratio: needs the explicit Gaussian beta density");
  if (!(r > 0.0)) throw DomainError("quasi_gibbs_ratio: window radius must be > 0");
  if (m < 1 || m > static_cast<std::size_t>(ensemble.n)) throw DomainError("quasi_gibbs_ratio: m outside [1, N]");
  if (m > 4) throw DomainError("quasi_gibbs_ratio: inside count is limited to 4 (product grid)");
  if (grid_order < 2) throw DomainError("quasi_gibbs_ratio: grid_order must be >= 2");

  const PotentialPair pot = PotentialPair::gaussian(ensemble.beta);
  const QuadratureGrid axis = gauss_legendre_grid({{-r, r}}, grid_order);
  std::size_t points = 1;
  for (std::size_t i = 0; i < m; ++i) points *= axis.size();

  struct PerSample {
    bool used = false;
    double lo = 0.0, hi = 0.0, spread = 0.0;
  };
  std::vector<PerSample> per(samples);

  parallel_for(samples, [&](std::size_t s) {
    const Configuration c = ensembles::sample(ensemble, s);
    std::vector<double> outside;
    std::size_t inside = 0;
    for (double x : c.coords()) {
      if (std::fabs(x) < r) {
        ++inside;
      } else {
        outside.push_back(x);
      }
    }
    if (inside != m) return;

    std::vector<double> corrected(points), x(m);
    double z = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
      std::size_t rest = p;
      double weight = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t idx = rest % axis.size();
        rest /= axis.size();
        x[i] = axis.nodes[idx];
        weight *= axis.weights[idx];
      }
      // cross term: sum over inside/outside pairs of Psi
      double cross = 0.0;
      for (double xi : x)
        for (double eta : outside) cross += pot.pair_potential(xi, eta);
      corrected[p] = -cross;
      z += weight * pot.boltzmann_weight(x) * std::exp(-cross);
    }
    const double log_z = std::log(z);
    PerSample ps;
    ps.used = true;
    ps.lo = std::numeric_limits<double>::infinity();
    ps.hi = -ps.lo;
    double clo = ps.lo, chi = ps.hi;
    for (double v : corrected) {
      clo = std::min(clo, v);
      chi = std::max(chi, v);
      const double full = v - log_z;
      ps.lo = std::min(ps.lo, full);
      ps.hi = std::max(ps.hi, full);
    }
    ps.spread = chi - clo;
    per[s] = ps;
  });

  QuasiGibbsResult out;
  out.samples_drawn = samples;
  out.ratio_min = std::numeric_limits<double>::infinity();
  out.ratio_max = -out.ratio_min;
  for (const auto& ps : per) {
    if (!ps.used) continue;
    out.spreads.push_back(ps.spread);
    out.ratio_min = std::min(out.ratio_min, ps.lo);
    out.ratio_max = std::max(out.ratio_max, ps.hi);
  }
  if (out.spreads.empty()) {
    std::ostringstream msg;
    msg << "quasi_gibbs_ratio: none of " << samples << " samples has exactly " << m << " points in (-" << r << ", "
        << r << ")";
    throw Error(msg.str());
  }
  out.spread_q10 = quantile(out.spreads, 0.1);
  out.spread_q50 = quantile(out.spreads, 0.5);
  out.spread_q90 = quantile(out.spreads, 0.9);
  out.spread_max = quantile(out.spreads, 1.0);
  return out;
}

}  // namespace ibmlab::measures
