#pragma once

#include <optional>
#include <vector>

#include "ibmlab/dynamics.hpp"

namespace ibmlab::ifc {

/// The reference run carries no recorded sub-steps or increments.
class MissingNoiseRecordError : public Error {
 public:
  using Error::Error;
};

/// The re-solve would have to take a step the reference run did not take.
class ScheduleDivergenceError : public Error {
 public:
  using Error::Error;
};

/// Trajectories of labels m..N-1 at every accepted sub-step of the reference.
struct FrozenTail {
  std::size_t m = 0;
  std::size_t n = 0;
  int dim = 1;
  std::uint64_t reference_seed = 0;
  std::vector<double> paths;  // (steps + 1) * (n - m) * dim, copied bitwise

  double coord(std::size_t k, std::size_t label, int c = 0) const {
    return paths[(k * (n - m) + (label - m)) * dim + c];
  }
};

FrozenTail freeze_tail(const dynamics::LabeledPath& reference, std::size_t m);

/// Shift of one tail label's whole path by epsilon along the first axis.
struct TailPerturbation {
  std::size_t label = 0;
  double epsilon = 0.0;
};

/// Head trajectory Y^m on the reference sub-step schedule.
struct HeadPath {
  std::size_t m = 0;
  int dim = 1;
  std::vector<double> times;   // steps + 1
  std::vector<double> states;  // (steps + 1) * m * dim
};

/// Re-solves the m-particle system with labels >= m frozen to the reference
/// (optionally perturbed), replaying the reference increments of labels < m
/// and its accepted sub-step schedule.
HeadPath solve_frozen_tail(const dynamics::LabeledPath& reference, std::size_t m, const dynamics::DriftModel& model,
                           std::optional<TailPerturbation> perturbation = std::nullopt);

/// max over sub-steps and head labels of |Y - X|.
double max_head_deviation(const HeadPath& head, const dynamics::LabeledPath& reference);

struct ConsistencyRow {
  std::size_t m = 0;
  double max_dev = 0.0;
  double perturbed_dev = 0.0;
  double epsilon = 0.0;
  /// Perturbed tail label, or none when m == N.
  std::optional<std::size_t> perturbed_label;
  /// Set when the perturbed re-solve hit a schedule divergence.
  bool perturbed_diverged = false;
};

/// Tail label whose initial position is farthest from the head.
std::optional<std::size_t> farthest_tail_label(const dynamics::LabeledPath& reference, std::size_t m);

/// One row per m; the perturbation column shifts `perturb_label` (default:
/// the farthest tail label) by epsilon.
std::vector<ConsistencyRow> consistency_report(const dynamics::LabeledPath& reference,
                                               const dynamics::DriftModel& model, const std::vector<std::size_t>& ms,
                                               double epsilon, std::optional<std::size_t> perturb_label = std::nullopt);

}  // namespace ibmlab::ifc
