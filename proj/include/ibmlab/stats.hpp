#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibmlab/common.hpp"
#include "ibmlab/dynamics.hpp"
#include "ibmlab/ensembles.hpp"
#include "ibmlab/quadrature.hpp"

namespace ibmlab::stats {

using RealFn = std::function<double(double)>;

enum class Normalization { Density, Probability };

std::string to_string(Normalization n);

struct HistogramEstimate {
  std::vector<double> edges;   // bins + 1, increasing
  std::vector<double> counts;  // raw counts per bin
  std::vector<double> values;  // normalized per `mode`
  Normalization mode = Normalization::Density;
  std::size_t replicas = 0;
  std::size_t in_range = 0;
  std::size_t out_of_range = 0;

  std::size_t bins() const { return counts.size(); }
  double width(std::size_t b) const { return edges[b + 1] - edges[b]; }
  double center(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
  /// sum values * width (density) or sum values (probability).
  double integral() const;
};

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

/// Normalization is over the in-range values, so density mode integrates
/// to 1 over the binned range.
HistogramEstimate histogram(std::span<const double> values, std::vector<double> edges,
                            Normalization mode = Normalization::Density, std::size_t replicas = 1);

/// Replica-pooled density of rescaled points. 1-D: the coordinate;
/// 2-D: the modulus |z| (radial density).
HistogramEstimate spectral_density(const std::vector<Configuration>& samples, const ensembles::ScalingMap& scaling,
                                   std::vector<double> edges);

/// Pooled rescaled 1-D coordinates or 2-D moduli, sorted.
std::vector<double> pooled_values(const std::vector<Configuration>& samples, const ensembles::ScalingMap& scaling);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov limiting tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_tail(double lambda);

/// One-sample KS against a continuous CDF; asymptotic p-value with the
/// usual small-sample correction.
TestResult ks_one_sample(std::span<const double> values, const RealFn& cdf);

/// Two-sample KS statistic sup |F_a - F_b| with asymptotic p-value.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square of observed counts against expected probabilities
/// (renormalized to the observed total); dof = bins - 1.
TestResult chi_square(std::span<const double> observed, std::span<const double> expected_probability);

/// Sup over bins of |histogram value - bin average of the reference|,
/// the bin average taken from the reference CDF.
double sup_distance(const HistogramEstimate& h, const RealFn& reference_cdf);

/// Semicircle density of the raw Gaussian beta = 2 ensemble, unfolded:
/// u(x) = N F_sc(x / sqrt(N)).
RealFn semicircle_unfolding(int n);
RealFn identity_unfolding();

/// Consecutive spacings of the unfolded points whose raw positions lie in
/// the window, in unfolded units (no mean normalization).
std::vector<double> unfolded_spacings(const Configuration& config, Interval window, const RealFn& unfolding);

/// Pooled unfolded spacings, normalized to mean 1, histogrammed in density
/// mode. Throws DomainError for fewer than 10 spacings.
HistogramEstimate spacing_distribution(const std::vector<Configuration>& samples, Interval window,
                                       const RealFn& unfolding, std::vector<double> edges,
                                       std::vector<double>* spacings_out = nullptr);

/// beta = 2 Wigner surmise (32/pi^2) s^2 exp(-4 s^2 / pi) and its CDF
/// erf(2s/sqrt(pi)) - (4s/pi) exp(-4 s^2/pi).
double wigner_surmise_pdf(double s);
double wigner_surmise_cdf(double s);

struct NumberVarianceRow {
  double radius = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, over samples
};

/// Variance of point counts in centred disks. The support radius defaults
/// to the largest modulus in the samples; radii beyond 0.7 of it are rejected.
std::vector<NumberVarianceRow> number_variance(const std::vector<Configuration>& samples,
                                               const std::vector<double>& radii,
                                               std::optional<double> support_radius = std::nullopt);

struct PowerLawFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;
  double residual = 0.0;  // RMS of log residuals
};

/// Least-squares line through (log x, log y). Needs >= 2 positive points.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

/// Unpaired: the pooled replicas of a and b are relabelled at random.
/// Paired: replica r of a and of b are swapped with probability 1/2 each,
/// valid when (a_r, b_r) is exchangeable, e.g. reversible dynamics in
/// equilibrium.
enum class Pairing { Unpaired, Paired };

struct PermutationOptions {
  std::size_t permutations = 999;
  std::uint64_t seed = 0;
  Pairing pairing = Pairing::Unpaired;
};

/// Replica-pooled two-sample KS with a replica-level permutation p-value
/// (1 + #{T* >= T}) / (1 + permutations). Points inside one configuration
/// are dependent, so permuting whole replicas keeps the test calibrated.
TestResult ks_permutation_test(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                               const PermutationOptions& opts);

/// Terminal point marginals of the paths against equilibrium samples.
/// Throws DomainError on mismatched N or dimension. With Pairing::Paired the
/// equilibrium list must have one entry per path.
TestResult stationarity_test(const std::vector<dynamics::LabeledPath>& paths,
                             const std::vector<Configuration>& equilibrium, const PermutationOptions& opts = {});

struct MsdFit {
  std::vector<double> lags;
  std::vector<double> msd;
  double exponent = 0.0;
  double residual = 0.0;
  std::vector<std::size_t> tagged;  // tagged label per replica
};

enum class TagSelection { Bulk, Index };

/// Bulk tag: the label closest to the origin at t = 0 (well within half
/// the spectral radius for centred ensembles). MSD is |X(t) - X(0)|^2
/// averaged over replicas, at up to `lag_points` log-spaced grid times.
MsdFit msd_tagged(const std::vector<dynamics::LabeledPath>& paths, TagSelection selection = TagSelection::Bulk,
                  std::size_t index = 0, std::size_t lag_points = 16, std::size_t min_replicas = 50);

}  // namespace ibmlab::stats
