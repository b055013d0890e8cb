#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibmlab/common.hpp"

namespace ibmlab::ensembles {

enum class EnsembleFamily { GaussianBeta, Ginibre, LaguerreBeta };

std::string to_string(EnsembleFamily f);
EnsembleFamily ensemble_family_from_string(const std::string& name);

/// Finite-N eigenvalue ensembles.
///
/// GaussianBeta: joint density  prod|x_i - x_j|^beta exp(-sum x_i^2 / 2);
///   beta = 2 is GUE with semicircle support [-2 sqrt(N), 2 sqrt(N)].
///   beta = 0 degenerates to N independent standard normals.
/// Ginibre: eigenvalues of an N x N matrix of i.i.d. complex normals with
///   E|g|^2 = 1; density 1/pi on the disk of radius sqrt(N). beta must be 2.
/// LaguerreBeta: joint density  prod|x_i - x_j|^beta prod x_i^{beta(alpha+1)/2 - 1} exp(-x_i)
///   with alpha = a - 1; beta = 2 is the Laguerre unitary ensemble with weight x^alpha e^{-x}.
struct EnsembleSpec {
  EnsembleFamily family = EnsembleFamily::GaussianBeta;
  int n = 1;
  double beta = 2.0;
  double a = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  int dim() const { return family == EnsembleFamily::Ginibre ? 2 : 1; }
};

/// One configuration for replica `replica`; 1-D output is strictly
/// increasing, 2-D output is sorted lexicographically. Deterministic in
/// (spec, replica).
Configuration sample(const EnsembleSpec& spec, std::uint64_t replica = 0);

/// Replicas [0, count) sampled in parallel.
std::vector<Configuration> sample_many(const EnsembleSpec& spec, std::size_t count);

enum class ScalingRegime { Bulk, SoftEdge, HardEdge, GinibreBulk };

std::string to_string(ScalingRegime r);
ScalingRegime scaling_regime_from_string(const std::string& name);

/// Maps raw finite-N eigenvalues to the local scale of a limit process.
///   Bulk:        x -> sqrt(N) x / pi       (density 1 at the centre)
///   SoftEdge:    x -> N^{1/6} (x - 2 sqrt(N))
///   HardEdge:    x -> 4 N x                (Laguerre weight e^{-x})
///   GinibreBulk: z -> z
/// 1-D Gaussian inputs with beta != 2 are first multiplied by sqrt(2/beta)
/// so every beta shares the semicircle on [-2 sqrt(N), 2 sqrt(N)].
struct ScalingMap {
  ScalingRegime regime = ScalingRegime::Bulk;
  int n = 1;
  double beta = 2.0;

  double forward(double x) const;
  double inverse(double x) const;
};

Configuration rescale(const Configuration& config, const ScalingMap& map);
Configuration unscale(const Configuration& config, const ScalingMap& map);

/// Semicircle density sqrt(4 - x^2) / (2 pi) on [-2, 2] and its CDF.
double semicircle_density(double x);
double semicircle_cdf(double x);

}  // namespace ibmlab::ensembles
