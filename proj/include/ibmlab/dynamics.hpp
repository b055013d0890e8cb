#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibmlab/common.hpp"
#include "ibmlab/rng.hpp"

namespace ibmlab::dynamics {

enum class DriftFamily { Dyson, Airy, Bessel, Ginibre1, Ginibre2 };

std::string to_string(DriftFamily f);
DriftFamily drift_family_from_string(const std::string& name);

/// Finite-N truncation of one of the logarithmic ISDE families.
///
///   Dyson:    (beta/2) sum_{|x_i - x_j| < r} 1/(x_i - x_j)
///   Airy:     (beta/2) [ sum_{|x_j| < r} 1/(x_i - x_j) - 2 sqrt(r)/pi ]
///   Bessel:   a/(2 x_i) + (beta/2) sum_j 1/(x_i - x_j)      (no window)
///   Ginibre1: sum_{|X_i - X_j| < r} (X_i - X_j)/|X_i - X_j|^2
///   Ginibre2: -X_i + sum_{|X_j| < r} (X_i - X_j)/|X_i - X_j|^2
///
/// The 1-D families additionally carry -(confinement/2) x_i. With
/// confinement = 1 and r = inf the Dyson drift is half the logarithmic
/// derivative of the Gaussian beta ensemble, so that ensemble is invariant.
struct DriftModel {
  DriftFamily family = DriftFamily::Dyson;
  double beta = 2.0;
  double r = std::numeric_limits<double>::infinity();
  double a = 1.0;
  double confinement = 0.0;

  void validate() const;
  int dim() const { return family == DriftFamily::Ginibre1 || family == DriftFamily::Ginibre2 ? 2 : 1; }
};

using DriftVec = std::array<double, 2>;

/// (1/pi) int_{-r}^0 sqrt(-x)/(-x) dx = 2 sqrt(r) / pi.
double airy_compensator(double r);

/// Drift of particle i. Throws CollisionError on a zero gap.
DriftVec drift(const DriftModel& model, std::size_t i, const Configuration& state);

/// Drift of particle i together with its nearest-neighbour distance. No
/// argument checks; for inner loops.
DriftVec drift_with_nearest(const DriftModel& model, std::size_t i, const Configuration& state, double& nearest);

/// Drift of every particle, flattened (n * dim).
std::vector<double> drift_all(const DriftModel& model, const Configuration& state);

/// Counter-based Brownian increments, one independent stream per particle
/// keyed by (seed, replica, stream id). A nominal step k carries a root
/// increment; halved sub-intervals are filled by Brownian-bridge splitting,
/// so the driving path is the same whatever the rejection pattern.
class BrownianSource {
 public:
  BrownianSource(std::uint64_t seed, std::uint64_t replica, std::vector<std::uint64_t> stream_ids, int dim,
                 double dt_nominal);

  int dim() const { return dim_; }
  std::size_t particles() const { return streams_.size(); }
  double dt_nominal() const { return dt_; }

  /// Increment over the whole nominal step k, variance dt_nominal per coordinate.
  void root(std::int64_t k, std::span<double> out) const;

  /// Split the increment over dyadic node (level, node) of step k into its two halves.
  void split(std::int64_t k, int level, std::uint32_t node, std::span<const double> parent, std::span<double> left,
             std::span<double> right) const;

 private:
  std::vector<CounterStream> streams_;
  int dim_;
  double dt_;
};

struct StepOptions {
  double dt_nominal = 1e-3;
  /// dt_min = dt_nominal * 2^-max_halvings.
  int max_halvings = 20;
  /// Planar models only: reject when |b_i| dt exceeds this fraction of the
  /// distance from particle i to its nearest neighbour.
  double max_jump_fraction = 0.5;
};

/// dt fell below dt_min while trying to resolve a near collision.
class StepUnderflowError : public Error {
 public:
  using Error::Error;
};

struct StepStats {
  std::int64_t accepted = 0;
  std::int64_t rejections = 0;
  int deepest_level = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
};

struct SimState {
  double t = 0.0;
  Configuration positions;
  double dt_current = 0.0;
  StepStats stats;
  /// Label order fixed at t = 0 (1-D); positions[order[k]] increase in k.
  std::vector<std::size_t> order;
};

/// Initial state; computes the label order for 1-D models.
SimState make_state(const Configuration& initial, const DriftModel& model, double dt_nominal);

/// One accepted sub-step as seen by a recorder.
struct AcceptedStep {
  double t_start;
  double dt;
  std::span<const double> state_before;
  std::span<const double> increments;
};

using StepObserver = std::function<void(const AcceptedStep&)>;

/// Advances the state across nominal step k with Euler-Maruyama. A proposal
/// that breaks the 1-D label order, leaves (0, inf) for Bessel, or (planar)
/// jumps too far is rejected; the interval is halved and both halves are
/// retried with bridge-split noise. After an accepted half the step size
/// returns to the coarser level when the dyadic grid allows.
void step(SimState& state, const DriftModel& model, const BrownianSource& noise, std::int64_t k,
          const StepOptions& opts, const StepObserver& observer = {});

/// x + b dt + dB, coordinate-wise; the one update formula used everywhere.
inline double euler_update(double x, double b, double dt, double db) { return x + b * dt + db; }

/// Whether a proposal is admissible for particles [first, last).
bool admissible(const DriftModel& model, const Configuration& proposal, const std::vector<std::size_t>& order,
                std::span<const double> drift_before, std::span<const double> nearest_before, double dt,
                const StepOptions& opts, std::size_t first, std::size_t last);

/// Per-particle nearest-neighbour distance (planar models need it for the jump test).
std::vector<double> nearest_distances(const Configuration& state);

struct EvolveOptions {
  double t_final = 0.1;
  double dt = 1e-3;
  int max_halvings = 20;
  double max_jump_fraction = 0.5;
  /// Output grid spacing in nominal steps.
  int output_every = 1;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  bool record_noise = false;
  /// Noise stream of each label; empty means 0..N-1.
  std::vector<std::uint64_t> stream_ids;
};

struct PathDiagnostics {
  std::int64_t accepted = 0;
  std::int64_t rejections = 0;
  int deepest_level = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
};

/// Trajectories on the output grid plus, when recorded, every accepted
/// sub-step with its Brownian increments.
struct LabeledPath {
  int dim = 1;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::vector<std::uint64_t> stream_ids;
  std::vector<std::size_t> order;
  double dt_nominal = 0.0;
  double max_jump_fraction = 0.5;
  std::vector<double> times;
  std::vector<double> positions;  // times.size() * n * dim
  PathDiagnostics diagnostics;

  bool has_noise = false;
  std::vector<double> step_t;        // start of each accepted sub-step
  std::vector<double> step_dt;
  std::vector<double> step_states;   // (steps + 1) * n * dim: state before each sub-step, then the final state
  std::vector<double> increments;    // steps * n * dim

  std::size_t grid_size() const { return times.size(); }
  std::size_t steps() const { return step_dt.size(); }
  Configuration at(std::size_t grid_index) const;
  Configuration step_state(std::size_t k) const;
  Configuration terminal() const { return at(times.size() - 1); }
  double coord(std::size_t grid_index, std::size_t particle, int c = 0) const {
    return positions[(grid_index * n + particle) * dim + c];
  }
};

LabeledPath evolve(const Configuration& initial, const DriftModel& model, const EvolveOptions& opts);

/// Replicas evolved in parallel; replica r uses initials[r] and opts.replica = r.
std::vector<LabeledPath> evolve_many(const std::vector<Configuration>& initials, const DriftModel& model,
                                     const EvolveOptions& opts);

/// Counts recorded states (grid and sub-step) that break the label order,
/// Bessel positivity or finiteness.
std::size_t count_invariant_violations(const LabeledPath& path, const DriftModel& model);

}  // namespace ibmlab::dynamics
