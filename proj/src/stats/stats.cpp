#include "ibmlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "ibmlab/rng.hpp"

namespace ibmlab::stats {

using ensembles::ScalingMap;

std::string to_string(Normalization n) { return n == Normalization::Density ? "density" : "probability"; }

double HistogramEstimate::integral() const {
  double s = 0.0;
  for (std::size_t b = 0; b < values.size(); ++b) s += mode == Normalization::Density ? values[b] * width(b) : values[b];
  return s;
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw DomainError("uniform_edges: need bins >= 1 and hi > lo");
  std::vector<double> e(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) e[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  e.back() = hi;
  return e;
}

HistogramEstimate histogram(std::span<const double> values, std::vector<double> edges, Normalization mode,
                            std::size_t replicas) {
  if (edges.size() < 2) throw DomainError("histogram: at least one bin is required");
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    if (!(edges[b + 1] > edges[b])) throw DomainError("histogram: edges must increase strictly");
  HistogramEstimate h;
  h.mode = mode;
  h.replicas = replicas;
  h.counts.assign(edges.size() - 1, 0.0);
  for (double v : values) {
    if (!(v >= edges.front() && v <= edges.back())) {
      ++h.out_of_range;
      continue;
    }
    // last bin is closed on the right
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t b = static_cast<std::size_t>(it - edges.begin());
    b = b == 0 ? 0 : std::min(b - 1, h.counts.size() - 1);
    h.counts[b] += 1.0;
    ++h.in_range;
  }
  h.edges = std::move(edges);
  h.values.assign(h.counts.size(), 0.0);
  if (h.in_range > 0) {
    const double total = static_cast<double>(h.in_range);
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      h.values[b] = mode == Normalization::Density ? h.counts[b] / (total * h.width(b)) : h.counts[b] / total;
  }
  return h;
}

std::vector<double> pooled_values(const std::vector<Configuration>& samples, const ScalingMap& scaling) {
  if (samples.empty()) throw DomainError("spectral density: no samples");
  std::vector<double> out;
  for (const auto& c : samples) {
    const Configuration s = ensembles::rescale(c, scaling);
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back(s.dim() == 1 ? s.x(i) : std::hypot(s.x(i), s.y(i)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

HistogramEstimate spectral_density(const std::vector<Configuration>& samples, const ScalingMap& scaling,
                                   std::vector<double> edges) {
  const std::vector<double> v = pooled_values(samples, scaling);
  return histogram(v, std::move(edges), Normalization::Density, samples.size());
}

double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-16 * std::fabs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double effective_n) {
  const double rn = std::sqrt(effective_n);
  return kolmogorov_tail((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace

TestResult ks_one_sample(std::span<const double> values, const RealFn& cdf) {
  if (values.empty()) throw DomainError("ks_one_sample: empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

namespace {

// sup |F_a - F_b| for sorted inputs, ties handled by advancing both sides.
double ks_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double d = ks_sorted(sa, sb);
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

TestResult chi_square(std::span<const double> observed, std::span<const double> expected_probability) {
  if (observed.size() != expected_probability.size() || observed.size() < 2)
    throw DomainError("chi_square: need matching observed/expected of at least two bins");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  const double psum = std::accumulate(expected_probability.begin(), expected_probability.end(), 0.0);
  if (!(total > 0.0) || !(psum > 0.0)) throw DomainError("chi_square: empty observation or expectation");
  double stat = 0.0;
  for (std::size_t b = 0; b < observed.size(); ++b) {
    const double e = total * expected_probability[b] / psum;
    if (e == 0.0) {
      if (observed[b] > 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
      continue;
    }
    stat += (observed[b] - e) * (observed[b] - e) / e;
  }
  const double dof = static_cast<double>(observed.size() - 1);
  return {stat, boost::math::gamma_q(0.5 * dof, 0.5 * stat)};
}

double sup_distance(const HistogramEstimate& h, const RealFn& reference_cdf) {
  double d = 0.0;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    double ref = reference_cdf(h.edges[b + 1]) - reference_cdf(h.edges[b]);
    if (h.mode == Normalization::Density) ref /= h.width(b);
    d = std::max(d, std::fabs(h.values[b] - ref));
  }
  return d;
}

RealFn semicircle_unfolding(int n) {
  if (n < 1) throw DomainError("semicircle_unfolding: n must be >= 1");
  const double nn = n;
  const double root = std::sqrt(nn);
  return [nn, root](double x) { return nn * ensembles::semicircle_cdf(std::clamp(x / root, -2.0, 2.0)); };
}

RealFn identity_unfolding() {
  return [](double x) { return x; };
}

std::vector<double> unfolded_spacings(const Configuration& config, Interval window, const RealFn& unfolding) {
  if (config.dim() != 1) throw DomainError("spacings: 1-D configurations only");
  std::vector<double> u;
  for (double x : config.coords())
    if (x >= window.lo && x <= window.hi) u.push_back(unfolding(x));
  std::sort(u.begin(), u.end());
  std::vector<double> s;
  for (std::size_t i = 1; i < u.size(); ++i) s.push_back(u[i] - u[i - 1]);
  return s;
}

HistogramEstimate spacing_distribution(const std::vector<Configuration>& samples, Interval window,
                                       const RealFn& unfolding, std::vector<double> edges,
                                       std::vector<double>* spacings_out) {
  std::vector<double> all;
  for (const auto& c : samples) {
    const auto s = unfolded_spacings(c, window, unfolding);
    all.insert(all.end(), s.begin(), s.end());
  }
  if (all.size() < 10) {
    std::ostringstream msg;
    msg << "spacing_distribution: only " << all.size() << " spacings in [" << window.lo << ", " << window.hi
        << "], need at least 10";
    throw DomainError(msg.str());
  }
  const double mean = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
  for (double& s : all) s /= mean;
  HistogramEstimate h = histogram(all, std::move(edges), Normalization::Density, samples.size());
  if (spacings_out) *spacings_out = std::move(all);
  return h;
}

double wigner_surmise_pdf(double s) {
  if (s < 0.0) return 0.0;
  constexpr double pi = std::numbers::pi;
  return 32.0 / (pi * pi) * s * s * std::exp(-4.0 * s * s / pi);
}

double wigner_surmise_cdf(double s) {
  if (s <= 0.0) return 0.0;
  constexpr double pi = std::numbers::pi;
  return std::erf(2.0 * s / std::sqrt(pi)) - 4.0 * s / pi * std::exp(-4.0 * s * s / pi);
}

std::vector<NumberVarianceRow> number_variance(const std::vector<Configuration>& samples,
                                               const std::vector<double>& radii,
                                               std::optional<double> support_radius) {
  if (samples.size() < 2) throw DomainError("number_variance: need at least two samples");
  double support = 0.0;
  for (const auto& c : samples) {
    if (c.dim() != 2) throw DomainError("number_variance: 2-D configurations only");
    for (std::size_t i = 0; i < c.size(); ++i) support = std::max(support, std::hypot(c.x(i), c.y(i)));
  }
  if (support_radius) support = *support_radius;
  for (double r : radii) {
    if (!(r > 0.0) || r > 0.7 * support) {
      std::ostringstream msg;
      msg << "number_variance: radius " << r << " is beyond 0.7 x support radius " << support;
      throw DomainError(msg.str());
    }
  }
  std::vector<NumberVarianceRow> rows;
  const double n = static_cast<double>(samples.size());
  for (double r : radii) {
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (const auto& c : samples) {
      double count = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i)
        if (std::hypot(c.x(i), c.y(i)) < r) count += 1.0;
      ++k;
      const double delta = count - mean;
      mean += delta / static_cast<double>(k);
      m2 += delta * (count - mean);
    }
    rows.push_back({r, mean, m2 / (n - 1.0)});
  }
  return rows;
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("fit_power_law: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) throw DomainError("fit_power_law: fewer than two positive points");
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_power_law: all abscissae coincide");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - fit.log_prefactor - fit.exponent * lx[i];
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

namespace {

struct PooledPoint {
  double value;
  std::uint32_t replica;
};

// KS between group 0 and group 1 where group[r] assigns whole replicas.
double grouped_ks(const std::vector<PooledPoint>& sorted, const std::vector<std::uint8_t>& group,
                  const std::vector<double>& sizes) {
  double n0 = 0.0, n1 = 0.0;
  for (std::size_t r = 0; r < group.size(); ++r) (group[r] ? n1 : n0) += sizes[r];
  double c0 = 0.0, c1 = 0.0, d = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double v = sorted[i].value;
    while (i < sorted.size() && sorted[i].value == v) {
      (group[sorted[i].replica] ? c1 : c0) += 1.0;
      ++i;
    }
    d = std::max(d, std::fabs(c0 / n0 - c1 / n1));
  }
  return d;
}

}  // namespace

TestResult ks_permutation_test(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                               const PermutationOptions& opts) {
  if (a.empty() || b.empty()) throw DomainError("permutation test: both samples need at least one replica");
  if (opts.pairing == Pairing::Paired && a.size() != b.size())
    throw DomainError("permutation test: paired samples need equal replica counts");
  const std::size_t ra = a.size();
  const std::size_t replicas = ra + b.size();
  std::vector<PooledPoint> pooled;
  std::vector<double> sizes(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto& src = r < ra ? a[r] : b[r - ra];
    if (src.empty()) throw DomainError("permutation test: empty replica");
    sizes[r] = static_cast<double>(src.size());
    for (double v : src) pooled.push_back({v, static_cast<std::uint32_t>(r)});
  }
  std::sort(pooled.begin(), pooled.end(), [](const PooledPoint& x, const PooledPoint& y) {
    return x.value < y.value || (x.value == y.value && x.replica < y.replica);
  });

  std::vector<std::uint8_t> observed(replicas, 0);
  std::fill(observed.begin() + static_cast<std::ptrdiff_t>(ra), observed.end(), 1);
  const double t_obs = grouped_ks(pooled, observed, sizes);

  std::vector<double> t_perm(opts.permutations);
  parallel_for(opts.permutations, [&](std::size_t p) {
    PhiloxEngine eng(derive_key(opts.seed, 0x5045524dULL, p));
    std::vector<std::uint8_t> g = observed;
    if (opts.pairing == Pairing::Paired) {
      for (std::size_t r = 0; r < ra; ++r) {
        const std::uint8_t bit = static_cast<std::uint8_t>(eng() >> 63);
        g[r] = bit;
        g[ra + r] = static_cast<std::uint8_t>(1 - bit);
      }
    } else {
      for (std::size_t i = replicas - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(eng() % (i + 1));
        std::swap(g[i], g[j]);
      }
    }
    t_perm[p] = grouped_ks(pooled, g, sizes);
  });
  // tolerance absorbs rounding between identical groupings
  const double tol = 1e-12;
  const auto exceed =
      std::count_if(t_perm.begin(), t_perm.end(), [&](double t) { return t >= t_obs - tol; });
  return {t_obs, static_cast<double>(1 + exceed) / static_cast<double>(1 + opts.permutations)};
}

TestResult stationarity_test(const std::vector<dynamics::LabeledPath>& paths,
                             const std::vector<Configuration>& equilibrium, const PermutationOptions& opts) {
  if (paths.empty() || equilibrium.empty()) throw DomainError("stationarity_test: empty input");
  const std::size_t n = paths.front().n;
  const int dim = paths.front().dim;
  auto flatten = [](const Configuration& c) {
    std::vector<double> v;
    for (std::size_t i = 0; i < c.size(); ++i) v.push_back(c.dim() == 1 ? c.x(i) : std::hypot(c.x(i), c.y(i)));
    return v;
  };
  std::vector<std::vector<double>> terminal, eq;
  for (const auto& p : paths) {
    if (p.n != n || p.dim != dim) throw DomainError("stationarity_test: paths with mismatched N or dimension");
    terminal.push_back(flatten(p.terminal()));
  }
  for (const auto& c : equilibrium) {
    if (c.size() != n || c.dim() != dim) {
      std::ostringstream msg;
      msg << "stationarity_test: equilibrium sample has N = " << c.size() << ", paths have N = " << n;
      throw DomainError(msg.str());
    }
    eq.push_back(flatten(c));
  }
  return ks_permutation_test(terminal, eq, opts);
}

MsdFit msd_tagged(const std::vector<dynamics::LabeledPath>& paths, TagSelection selection, std::size_t index,
                  std::size_t lag_points, std::size_t min_replicas) {
  if (paths.size() < min_replicas) {
    std::ostringstream msg;
    msg << "msd_tagged: " << paths.size() << " replicas, need at least " << min_replicas;
    throw DomainError(msg.str());
  }
  const auto& times = paths.front().times;
  for (const auto& p : paths)
    if (p.times != times) throw DomainError("msd_tagged: replicas must share the output grid");
  if (times.size() < 3) throw DomainError("msd_tagged: output grid too short");
  const double t_lo = times[1] - times[0];
  const double t_hi = times.back() - times[0];
  if (!(t_hi >= 10.0 * t_lo * (1.0 - 1e-12)))
    throw DomainError("msd_tagged: lags span less than one decade; refine the output grid or extend T");
  if (lag_points < 2) throw DomainError("msd_tagged: need at least two lag points");

  std::vector<std::size_t> grid;
  for (std::size_t j = 0; j < lag_points; ++j) {
    const double target =
        times[0] + t_lo * std::pow(t_hi / t_lo, static_cast<double>(j) / static_cast<double>(lag_points - 1));
    auto it = std::lower_bound(times.begin() + 1, times.end(), target);
    std::size_t g = static_cast<std::size_t>(it - times.begin());
    if (g == times.size()) g = times.size() - 1;
    if (g > 1 && target - times[g - 1] < times[g] - target) --g;
    if (grid.empty() || grid.back() != g) grid.push_back(g);
  }

  MsdFit fit;
  for (const auto& p : paths) {
    std::size_t tag = index;
    if (selection == TagSelection::Bulk) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p.n; ++i) {
        const double r = std::hypot(p.coord(0, i, 0), p.dim == 2 ? p.coord(0, i, 1) : 0.0);
        if (r < best) {
          best = r;
          tag = i;
        }
      }
    } else if (index >= p.n) {
      throw DomainError("msd_tagged: tag index out of range");
    }
    fit.tagged.push_back(tag);
  }
  for (std::size_t g : grid) {
    double sum = 0.0;
    for (std::size_t r = 0; r < paths.size(); ++r) {
      const auto& p = paths[r];
      double d2 = 0.0;
      for (int c = 0; c < p.dim; ++c) {
        const double dx = p.coord(g, fit.tagged[r], c) - p.coord(0, fit.tagged[r], c);
        d2 += dx * dx;
      }
      sum += d2;
    }
    fit.lags.push_back(times[g] - times[0]);
    fit.msd.push_back(sum / static_cast<double>(paths.size()));
  }
  const PowerLawFit pl = fit_power_law(fit.lags, fit.msd);
  fit.exponent = pl.exponent;
  fit.residual = pl.residual;
  if (!std::isfinite(fit.exponent)) throw DomainError("msd_tagged: fitted exponent is not finite");
  return fit;
}

}  // namespace ibmlab::stats
