#include "ibmlab/ifc.hpp"

#include <cmath>
#include <sstream>

namespace ibmlab::ifc {

using dynamics::DriftModel;
using dynamics::LabeledPath;

namespace {

void require_record(const LabeledPath& reference) {
  if (!reference.has_noise || reference.step_states.size() != (reference.steps() + 1) * reference.n * reference.dim)
    throw MissingNoiseRecordError("reference path has no recorded increments; evolve it with record_noise");
}

void require_head_size(const LabeledPath& reference, std::size_t m) {
  if (m < 1 || m > reference.n) {
    std::ostringstream msg;
    msg << "head size m = " << m << " outside [1, " << reference.n << "]";
    throw DomainError(msg.str());
  }
}

}  // namespace

FrozenTail freeze_tail(const LabeledPath& reference, std::size_t m) {
  require_record(reference);
  require_head_size(reference, m);
  FrozenTail tail{m, reference.n, reference.dim, reference.seed, {}};
  const std::size_t width = reference.n * reference.dim;
  const std::size_t tail_width = (reference.n - m) * reference.dim;
  tail.paths.reserve((reference.steps() + 1) * tail_width);
  for (std::size_t k = 0; k <= reference.steps(); ++k) {
    const auto first = reference.step_states.begin() + static_cast<std::ptrdiff_t>(k * width + m * reference.dim);
    tail.paths.insert(tail.paths.end(), first, first + static_cast<std::ptrdiff_t>(tail_width));
  }
  return tail;
}

HeadPath solve_frozen_tail(const LabeledPath& reference, std::size_t m, const DriftModel& model,
                           std::optional<TailPerturbation> perturbation) {
  model.validate();
  if (model.dim() != reference.dim) throw DomainError("frozen-tail re-solve: model dimension does not match the path");
  const FrozenTail tail = freeze_tail(reference, m);
  if (perturbation && (perturbation->label < m || perturbation->label >= reference.n))
    throw DomainError("tail perturbation must target a label >= m");

  const int d = reference.dim;
  const std::size_t n = reference.n;
  const std::size_t steps = reference.steps();
  const dynamics::StepOptions opts{reference.dt_nominal, 0, reference.max_jump_fraction};

  auto fill_tail = [&](Configuration& full, std::size_t k) {
    auto& c = full.coords();
    for (std::size_t label = m; label < n; ++label)
      for (int q = 0; q < d; ++q) c[label * d + q] = tail.coord(k, label, q);
    if (perturbation) c[perturbation->label * d] += perturbation->epsilon;
  };

  HeadPath head;
  head.m = m;
  head.dim = d;
  head.times.reserve(steps + 1);
  head.states.reserve((steps + 1) * m * d);

  Configuration full(d, std::vector<double>(n * d));
  Configuration next(d, std::vector<double>(n * d));
  // initial head is the reference head at t = 0
  std::vector<double> y(reference.step_states.begin(), reference.step_states.begin() + static_cast<std::ptrdiff_t>(m * d));
  head.times.push_back(0.0);
  head.states.insert(head.states.end(), y.begin(), y.end());

  std::vector<double> b(m * d), nearest(m);
  for (std::size_t k = 0; k < steps; ++k) {
    std::copy(y.begin(), y.end(), full.coords().begin());
    fill_tail(full, k);
    for (std::size_t i = 0; i < m; ++i) {
      const dynamics::DriftVec bi = dynamics::drift_with_nearest(model, i, full, nearest[i]);
      for (int q = 0; q < d; ++q) b[i * d + q] = bi[q];
    }
    const double dt = reference.step_dt[k];
    const double* db = reference.increments.data() + k * n * d;
    for (std::size_t idx = 0; idx < m * d; ++idx) y[idx] = dynamics::euler_update(y[idx], b[idx], dt, db[idx]);

    std::copy(y.begin(), y.end(), next.coords().begin());
    fill_tail(next, k + 1);
    if (!dynamics::admissible(model, next, reference.order, b, nearest, dt, opts, 0, m)) {
      std::ostringstream msg;
      msg << "schedule divergence at sub-step " << k << " (t = " << reference.step_t[k] << ", dt = " << dt
          << "): the head proposal is inadmissible where the reference accepted";
      throw ScheduleDivergenceError(msg.str());
    }
    head.times.push_back(reference.step_t[k] + dt);
    head.states.insert(head.states.end(), y.begin(), y.end());
  }
  return head;
}

double max_head_deviation(const HeadPath& head, const LabeledPath& reference) {
  require_record(reference);
  const std::size_t width = reference.n * reference.dim;
  const std::size_t hw = head.m * head.dim;
  if (head.states.size() != (reference.steps() + 1) * hw) throw DomainError("head path does not match the reference");
  double worst = 0.0;
  for (std::size_t k = 0; k <= reference.steps(); ++k)
    for (std::size_t q = 0; q < hw; ++q)
      worst = std::max(worst, std::fabs(head.states[k * hw + q] - reference.step_states[k * width + q]));
  return worst;
}

std::optional<std::size_t> farthest_tail_label(const LabeledPath& reference, std::size_t m) {
  require_head_size(reference, m);
  if (m == reference.n) return std::nullopt;
  const Configuration start = reference.at(0);
  std::size_t best = m;
  double best_dist = -1.0;
  for (std::size_t label = m; label < reference.n; ++label) {
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < m; ++h)
      dist = std::min(dist, std::hypot(start.x(label) - start.x(h), start.y(label) - start.y(h)));
    if (dist > best_dist) {
      best_dist = dist;
      best = label;
    }
  }
  return best;
}

std::vector<ConsistencyRow> consistency_report(const LabeledPath& reference, const DriftModel& model,
                                               const std::vector<std::size_t>& ms, double epsilon,
                                               std::optional<std::size_t> perturb_label) {
  require_record(reference);
  for (std::size_t m : ms) require_head_size(reference, m);
  std::vector<ConsistencyRow> rows(ms.size());
  parallel_for(ms.size(), [&](std::size_t r) {
    const std::size_t m = ms[r];
    ConsistencyRow row;
    row.m = m;
    row.epsilon = epsilon;
    const HeadPath head = solve_frozen_tail(reference, m, model);
    row.max_dev = max_head_deviation(head, reference);
    std::optional<std::size_t> label = perturb_label;
    if (!label || *label < m || *label >= reference.n) label = farthest_tail_label(reference, m);
    row.perturbed_label = label;
    if (!label) {
      row.perturbed_dev = row.max_dev;
    } else {
      try {
        row.perturbed_dev = max_head_deviation(solve_frozen_tail(reference, m, model, TailPerturbation{*label, epsilon}),
                                               reference);
      } catch (const ScheduleDivergenceError&) {
        row.perturbed_diverged = true;
        row.perturbed_dev = std::numeric_limits<double>::quiet_NaN();
      }
    }
    rows[r] = row;
  });
  return rows;
}

}  // namespace ibmlab::ifc
