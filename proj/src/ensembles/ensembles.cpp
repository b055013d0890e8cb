#include "ibmlab/ensembles.hpp"

#include <cmath>
#include <complex>

#include <lapacke.h>

#include <Eigen/Dense>
#include <iostream>
#include <numbers>

#include "ibmlab/rng.hpp"

namespace ibmlab::ensembles {

namespace {

constexpr int kMaxRedraws = 16;

bool strictly_increasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) return false;
  return true;
}

std::vector<double> tridiagonal_eigenvalues(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub) {
  if (diag.size() == 1) return {diag(0)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return {};
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> gaussian_beta(const EnsembleSpec& spec, PhiloxEngine& rng) {
  const int n = spec.n;
  Eigen::VectorXd diag(n), sub(std::max(0, n - 1));
  for (int i = 0; i < n; ++i) diag(i) = rng.normal();
  for (int i = 0; i + 1 < n; ++i) sub(i) = rng.chi(spec.beta * (n - 1 - i)) / std::numbers::sqrt2;
  return tridiagonal_eigenvalues(diag, sub);
}

std::vector<double> laguerre_beta(const EnsembleSpec& spec, PhiloxEngine& rng) {
  const int n = spec.n;
  const double alpha = spec.a - 1.0;
  std::vector<double> d(n), e(std::max(0, n - 1));
  for (int i = 0; i < n; ++i) d[i] = rng.chi(spec.beta * (alpha + n - i));
  for (int i = 0; i + 1 < n; ++i) e[i] = rng.chi(spec.beta * (n - 1 - i));
  Eigen::VectorXd diag(n), sub(std::max(0, n - 1));
  for (int i = 0; i < n; ++i) diag(i) = d[i] * d[i] + (i > 0 ? e[i - 1] * e[i - 1] : 0.0);
  for (int i = 0; i + 1 < n; ++i) sub(i) = d[i] * e[i];
  auto ev = tridiagonal_eigenvalues(diag, sub);
  for (double& x : ev) x *= 0.5;
  return ev;
}

std::vector<double> ginibre(const EnsembleSpec& spec, PhiloxEngine& rng) {
  const int n = spec.n;
  std::vector<lapack_complex_double> a(static_cast<std::size_t>(n) * n);
  for (auto& z : a) {
    const double re = rng.normal() / std::numbers::sqrt2;
    const double im = rng.normal() / std::numbers::sqrt2;
    z = lapack_complex_double{re, im};
  }
  std::vector<lapack_complex_double> w(n);
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(), nullptr, 1, nullptr, 1);
  if (info != 0) return {};
  std::vector<std::pair<double, double>> pts(n);
  for (int i = 0; i < n; ++i) pts[i] = {std::real(w[i]), std::imag(w[i])};
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  out.reserve(2 * n);
  for (const auto& [x, y] : pts) {
    out.push_back(x);
    out.push_back(y);
  }
  return out;
}

}  // namespace

std::string to_string(EnsembleFamily f) {
  switch (f) {
    case EnsembleFamily::GaussianBeta: return "gaussian";
    case EnsembleFamily::Ginibre: return "ginibre";
    case EnsembleFamily::LaguerreBeta: return "laguerre";
  }
  return "unknown";
}

EnsembleFamily ensemble_family_from_string(const std::string& name) {
  for (auto f : {EnsembleFamily::GaussianBeta, EnsembleFamily::Ginibre, EnsembleFamily::LaguerreBeta})
    if (to_string(f) == name) return f;
  throw DomainError("unknown ensemble '" + name + "' (expected gaussian, ginibre or laguerre)");
}

void EnsembleSpec::validate() const {
  if (n < 1) throw DomainError("ensemble: N must be >= 1");
  switch (family) {
    case EnsembleFamily::GaussianBeta:
      if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("gaussian ensemble: beta must be >= 0");
      break;
    case EnsembleFamily::LaguerreBeta:
      if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("laguerre ensemble: beta must be > 0");
      if (!(a >= 1.0)) throw DomainError("laguerre ensemble: requires a >= 1");
      break;
    case EnsembleFamily::Ginibre:
      if (beta != 2.0) throw DomainError("ginibre ensemble: planar systems are restricted to beta = 2");
      break;
  }
}

Configuration sample(const EnsembleSpec& spec, std::uint64_t replica) {
  spec.validate();
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    PhiloxEngine rng(derive_key(spec.seed, replica, static_cast<std::uint64_t>(attempt)));
    std::vector<double> pts;
    switch (spec.family) {
      case EnsembleFamily::GaussianBeta: pts = gaussian_beta(spec, rng); break;
      case EnsembleFamily::LaguerreBeta: pts = laguerre_beta(spec, rng); break;
      case EnsembleFamily::Ginibre: pts = ginibre(spec, rng); break;
    }
    const bool ok = spec.family == EnsembleFamily::Ginibre ? !pts.empty() : (!pts.empty() && strictly_increasing(pts));
    if (ok) return Configuration(spec.dim(), std::move(pts));
    std::clog << "ibmlab: " << to_string(spec.family) << " replica " << replica << " attempt " << attempt
              << " rejected (eigensolver failure or tied eigenvalues); redrawing\n";
  }
  throw Error("ensemble sampler failed after repeated redraws");
}

std::vector<Configuration> sample_many(const EnsembleSpec& spec, std::size_t count) {
  spec.validate();
  std::vector<Configuration> out(count);
  parallel_for(count, [&](std::size_t r) { out[r] = sample(spec, r); });
  return out;
}

std::string to_string(ScalingRegime r) {
  switch (r) {
    case ScalingRegime::Bulk: return "bulk";
    case ScalingRegime::SoftEdge: return "soft-edge";
    case ScalingRegime::HardEdge: return "hard-edge";
    case ScalingRegime::GinibreBulk: return "ginibre-bulk";
  }
  return "unknown";
}

ScalingRegime scaling_regime_from_string(const std::string& name) {
  for (auto r : {ScalingRegime::Bulk, ScalingRegime::SoftEdge, ScalingRegime::HardEdge, ScalingRegime::GinibreBulk})
    if (to_string(r) == name) return r;
  throw DomainError("unknown scaling regime '" + name + "'");
}

double ScalingMap::forward(double x) const {
  const double nn = static_cast<double>(n);
  switch (regime) {
    case ScalingRegime::Bulk: return x * std::sqrt(2.0 / beta) * std::sqrt(nn) / std::numbers::pi;
    case ScalingRegime::SoftEdge: return std::pow(nn, 1.0 / 6.0) * (x * std::sqrt(2.0 / beta) - 2.0 * std::sqrt(nn));
    case ScalingRegime::HardEdge: return 4.0 * nn * x;
    case ScalingRegime::GinibreBulk: return x;
  }
  return x;
}

double ScalingMap::inverse(double x) const {
  const double nn = static_cast<double>(n);
  switch (regime) {
    case ScalingRegime::Bulk: return x * std::numbers::pi / std::sqrt(nn) / std::sqrt(2.0 / beta);
    case ScalingRegime::SoftEdge: return (x / std::pow(nn, 1.0 / 6.0) + 2.0 * std::sqrt(nn)) / std::sqrt(2.0 / beta);
    case ScalingRegime::HardEdge: return x / (4.0 * nn);
    case ScalingRegime::GinibreBulk: return x;
  }
  return x;
}

namespace {

void check_map(const Configuration& c, const ScalingMap& map) {
  if (map.n < 1) throw DomainError("scaling map: N must be >= 1");
  if (!(map.beta > 0.0)) throw DomainError("scaling map: beta must be > 0");
  const bool planar = map.regime == ScalingRegime::GinibreBulk;
  if (planar && c.dim() != 2) throw DomainError("ginibre-bulk scaling needs a planar configuration");
  if (!planar && c.dim() != 1) throw DomainError(to_string(map.regime) + " scaling needs a 1-D configuration");
}

Configuration apply(const Configuration& c, const ScalingMap& map, bool forward) {
  check_map(c, map);
  if (map.regime == ScalingRegime::GinibreBulk) return c;
  std::vector<double> xs(c.coords());
  for (double& x : xs) {
    if (map.regime == ScalingRegime::HardEdge && x < 0.0)
      throw DomainError("hard-edge scaling needs points in [0, inf)");
    x = forward ? map.forward(x) : map.inverse(x);
  }
  return Configuration(1, std::move(xs));
}

}  // namespace

Configuration rescale(const Configuration& config, const ScalingMap& map) { return apply(config, map, true); }

Configuration unscale(const Configuration& config, const ScalingMap& map) { return apply(config, map, false); }

double semicircle_density(double x) { return std::fabs(x) >= 2.0 ? 0.0 : std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi); }

double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + (x * std::sqrt(4.0 - x * x) / 4.0 + std::asin(x / 2.0)) / std::numbers::pi;
}

}  // namespace ibmlab::ensembles
