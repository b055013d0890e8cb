#include "ibmlab/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ibmlab::dynamics {

namespace {

[[noreturn]] void collision(std::size_t i, std::size_t j) {
  std::ostringstream msg;
  msg << "particles " << i << " and " << j << " coincide; the step size is too large to resolve the approach";
  throw CollisionError(msg.str());
}

// Drift of particle i; when nearest != nullptr also the distance to the
// closest other particle. The summation order is the label order, which
// keeps frozen-tail re-solves bitwise identical to the reference.
DriftVec drift_impl(const DriftModel& m, std::size_t i, const Configuration& s, double* nearest) {
  const std::size_t n = s.size();
  double best = std::numeric_limits<double>::infinity();
  DriftVec out{0.0, 0.0};

  if (m.dim() == 1) {
    const double xi = s.x(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double xj = s.x(j);
      const double d = xi - xj;
      if (d == 0.0) collision(i, j);
      best = std::min(best, std::fabs(d));
      switch (m.family) {
        case DriftFamily::Dyson:
          if (std::fabs(d) < m.r) sum += 1.0 / d;
          break;
        case DriftFamily::Airy:
          if (std::fabs(xj) < m.r) sum += 1.0 / d;
          break;
        default:
          sum += 1.0 / d;
          break;
      }
    }
    double b = 0.0;
    switch (m.family) {
      case DriftFamily::Dyson: b = 0.5 * m.beta * sum; break;
      case DriftFamily::Airy: b = 0.5 * m.beta * (sum - airy_compensator(m.r)); break;
      case DriftFamily::Bessel:
        if (!(xi > 0.0)) throw DomainError("Bessel drift needs positions in (0, inf)");
        b = m.a / (2.0 * xi) + 0.5 * m.beta * sum;
        break;
      default: break;
    }
    if (m.confinement != 0.0) b -= 0.5 * m.confinement * xi;
    out[0] = b;
  } else {
    const double xi = s.x(i), yi = s.y(i);
    double sx = 0.0, sy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = xi - s.x(j), dy = yi - s.y(j);
      const double d2 = dx * dx + dy * dy;
      if (d2 == 0.0) collision(i, j);
      best = std::min(best, d2);
      const bool inside = m.family == DriftFamily::Ginibre1 ? d2 < m.r * m.r
                                                            : s.x(j) * s.x(j) + s.y(j) * s.y(j) < m.r * m.r;
      if (inside) {
        sx += dx / d2;
        sy += dy / d2;
      }
    }
    best = std::sqrt(best);
    if (m.family == DriftFamily::Ginibre2) {
      out = {-xi + sx, -yi + sy};
    } else {
      out = {sx, sy};
    }
  }
  if (nearest) *nearest = best;
  return out;
}

}  // namespace

std::string to_string(DriftFamily f) {
  switch (f) {
    case DriftFamily::Dyson: return "dyson";
    case DriftFamily::Airy: return "airy";
    case DriftFamily::Bessel: return "bessel";
    case DriftFamily::Ginibre1: return "ginibre1";
    case DriftFamily::Ginibre2: return "ginibre2";
  }
  return "unknown";
}

DriftFamily drift_family_from_string(const std::string& name) {
  for (auto f : {DriftFamily::Dyson, DriftFamily::Airy, DriftFamily::Bessel, DriftFamily::Ginibre1,
                 DriftFamily::Ginibre2})
    if (to_string(f) == name) return f;
  throw DomainError("unknown model '" + name + "' (expected dyson, airy, bessel, ginibre1 or ginibre2)");
}

void DriftModel::validate() const {
  if (!(r > 0.0)) throw DomainError("truncation radius r must be > 0");
  if (dim() == 2) {
    if (beta != 2.0) throw DomainError("Ginibre models are planar and require beta = 2");
    if (confinement != 0.0) throw DomainError("Ginibre models take no extra confinement");
    return;
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be > 0");
  if (!(confinement >= 0.0) || !std::isfinite(confinement)) throw DomainError("confinement must be >= 0");
  if (family == DriftFamily::Bessel && !(a >= 1.0))
    throw DomainError("Bessel model requires a >= 1 (got " + std::to_string(a) + ")");
  if (family == DriftFamily::Airy && !std::isfinite(r))
    throw DomainError("Airy model needs a finite truncation radius r for its compensator");
}

double airy_compensator(double r) { return 2.0 * std::sqrt(r) / std::numbers::pi; }

DriftVec drift_with_nearest(const DriftModel& model, std::size_t i, const Configuration& state, double& nearest) {
  return drift_impl(model, i, state, &nearest);
}

DriftVec drift(const DriftModel& model, std::size_t i, const Configuration& state) {
  if (state.dim() != model.dim()) throw DomainError("drift: configuration dimension does not match the model");
  if (i >= state.size()) throw DomainError("drift: particle index out of range");
  return drift_impl(model, i, state, nullptr);
}

std::vector<double> drift_all(const DriftModel& model, const Configuration& state) {
  if (state.dim() != model.dim()) throw DomainError("drift: configuration dimension does not match the model");
  const int d = state.dim();
  std::vector<double> out(state.size() * d);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const DriftVec b = drift_impl(model, i, state, nullptr);
    for (int c = 0; c < d; ++c) out[i * d + c] = b[c];
  }
  return out;
}

std::vector<double> nearest_distances(const Configuration& state) {
  const std::size_t n = state.size();
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = std::fabs(state.x(i) - state.x(j));
      if (state.dim() == 2) d = std::hypot(state.x(i) - state.x(j), state.y(i) - state.y(j));
      out[i] = std::min(out[i], d);
      out[j] = std::min(out[j], d);
    }
  return out;
}

// ---------------------------------------------------------------------------

BrownianSource::BrownianSource(std::uint64_t seed, std::uint64_t replica, std::vector<std::uint64_t> stream_ids,
                               int dim, double dt_nominal)
    : dim_(dim), dt_(dt_nominal) {
  if (dim != 1 && dim != 2) throw DomainError("Brownian source: dimension must be 1 or 2");
  if (!(dt_nominal > 0.0)) throw DomainError("Brownian source: dt must be > 0");
  streams_.reserve(stream_ids.size());
  for (auto id : stream_ids) streams_.emplace_back(derive_key(seed, replica, id));
}

void BrownianSource::root(std::int64_t k, std::span<double> out) const {
  const double scale = std::sqrt(dt_);
  for (std::size_t p = 0; p < streams_.size(); ++p) {
    const auto z = streams_[p].normal_pair(static_cast<std::uint64_t>(k), 0, 0);
    for (int c = 0; c < dim_; ++c) out[p * dim_ + c] = scale * z[c];
  }
}

void BrownianSource::split(std::int64_t k, int level, std::uint32_t node, std::span<const double> parent,
                           std::span<double> left, std::span<double> right) const {
  // Parent interval has length tau = dt 2^-level; the midpoint given the
  // endpoints is N(parent/2, tau/4).
  const double sd = std::sqrt(std::ldexp(dt_, -level) / 4.0);
  for (std::size_t p = 0; p < streams_.size(); ++p) {
    const auto z = streams_[p].normal_pair(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(level + 1), node);
    for (int c = 0; c < dim_; ++c) {
      const std::size_t idx = p * dim_ + c;
      left[idx] = 0.5 * parent[idx] + sd * z[c];
      right[idx] = parent[idx] - left[idx];
    }
  }
}

// ---------------------------------------------------------------------------

SimState make_state(const Configuration& initial, const DriftModel& model, double dt_nominal) {
  model.validate();
  if (initial.dim() != model.dim()) throw DomainError("initial configuration dimension does not match the model");
  SimState s;
  s.positions = initial;
  s.dt_current = dt_nominal;
  for (double v : initial.coords())
    if (!std::isfinite(v)) throw DomainError("initial configuration has non-finite coordinates");
  if (model.dim() == 1) {
    s.order.resize(initial.size());
    std::iota(s.order.begin(), s.order.end(), std::size_t{0});
    std::stable_sort(s.order.begin(), s.order.end(),
                     [&](std::size_t a, std::size_t b) { return initial.x(a) < initial.x(b); });
    for (std::size_t k = 1; k < s.order.size(); ++k)
      if (!(initial.x(s.order[k]) > initial.x(s.order[k - 1])))
        throw CollisionError("initial configuration has coincident points");
  }
  if (model.family == DriftFamily::Bessel)
    for (double v : initial.coords())
      if (!(v > 0.0)) throw DomainError("Bessel model needs an initial configuration in (0, inf)");
  return s;
}

bool admissible(const DriftModel& model, const Configuration& proposal, const std::vector<std::size_t>& order,
                std::span<const double> drift_before, std::span<const double> nearest_before, double dt,
                const StepOptions& opts, std::size_t first, std::size_t last) {
  const int d = proposal.dim();
  for (std::size_t i = first; i < last; ++i)
    for (int c = 0; c < d; ++c)
      if (!std::isfinite(proposal.coords()[i * d + c])) return false;
  if (d == 1) {
    for (std::size_t k = 1; k < order.size(); ++k)
      if (!(proposal.x(order[k]) > proposal.x(order[k - 1]))) return false;
    if (model.family == DriftFamily::Bessel)
      for (std::size_t i = first; i < last; ++i)
        if (!(proposal.x(i) > 0.0)) return false;
    return true;
  }
  for (std::size_t i = first; i < last; ++i) {
    const double jump = std::hypot(drift_before[i * 2], drift_before[i * 2 + 1]) * dt;
    if (jump > opts.max_jump_fraction * nearest_before[i]) return false;
  }
  return true;
}

namespace {

struct Pending {
  int level;
  std::uint32_t node;
  std::vector<double> incr;
};

double extent_min_gap(const Configuration& s, const std::vector<std::size_t>& order,
                      const std::vector<double>& nearest) {
  double g = std::numeric_limits<double>::infinity();
  if (s.dim() == 1) {
    for (std::size_t k = 1; k < order.size(); ++k) g = std::min(g, s.x(order[k]) - s.x(order[k - 1]));
  } else {
    for (double v : nearest) g = std::min(g, v);
  }
  return g;
}

}  // namespace

void step(SimState& state, const DriftModel& model, const BrownianSource& noise, std::int64_t k,
          const StepOptions& opts, const StepObserver& observer) {
  const std::size_t n = state.positions.size();
  const int d = state.positions.dim();
  if (noise.particles() != n || noise.dim() != d) throw DomainError("step: noise source does not match the state");
  if (noise.dt_nominal() != opts.dt_nominal) throw DomainError("step: noise increments do not match dt");

  std::vector<Pending> stack;
  stack.push_back({0, 0, std::vector<double>(n * d)});
  noise.root(k, stack.back().incr);

  std::vector<double> b, nearest;
  bool drift_current = false;
  Configuration proposal = state.positions;

  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    const double dt = std::ldexp(opts.dt_nominal, -cur.level);
    state.dt_current = dt;

    if (!drift_current) {
      b.resize(n * d);
      nearest.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const DriftVec bi = drift_impl(model, i, state.positions, &nearest[i]);
        for (int c = 0; c < d; ++c) b[i * d + c] = bi[c];
      }
      drift_current = true;
    }
    auto& pc = proposal.coords();
    const auto& xc = state.positions.coords();
    for (std::size_t idx = 0; idx < n * d; ++idx) pc[idx] = euler_update(xc[idx], b[idx], dt, cur.incr[idx]);

    if (admissible(model, proposal, state.order, b, nearest, dt, opts, 0, n)) {
      const double t_start = opts.dt_nominal * (static_cast<double>(k) + std::ldexp(static_cast<double>(cur.node), -cur.level));
      if (observer) observer(AcceptedStep{t_start, dt, xc, cur.incr});
      state.stats.min_gap = std::min(state.stats.min_gap, extent_min_gap(state.positions, state.order, nearest));
      std::swap(state.positions, proposal);
      drift_current = false;
      state.t = opts.dt_nominal * (static_cast<double>(k) + std::ldexp(static_cast<double>(cur.node) + 1.0, -cur.level));
      ++state.stats.accepted;
      for (double v : state.positions.coords()) state.stats.max_abs = std::max(state.stats.max_abs, std::fabs(v));
      continue;
    }

    ++state.stats.rejections;
    if (cur.level + 1 > opts.max_halvings) {
      std::ostringstream msg;
      msg << "step size fell below dt_min = " << std::ldexp(opts.dt_nominal, -opts.max_halvings) << " at t = "
          << state.t << " (nominal step " << k << "); minimum gap "
          << extent_min_gap(state.positions, state.order, nearest);
      throw StepUnderflowError(msg.str());
    }
    Pending left{cur.level + 1, cur.node * 2u, std::vector<double>(n * d)};
    Pending right{cur.level + 1, cur.node * 2u + 1u, std::vector<double>(n * d)};
    noise.split(k, cur.level, cur.node, cur.incr, left.incr, right.incr);
    state.stats.deepest_level = std::max(state.stats.deepest_level, cur.level + 1);
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
}

// ---------------------------------------------------------------------------

Configuration LabeledPath::at(std::size_t g) const {
  const auto first = positions.begin() + static_cast<std::ptrdiff_t>(g * n * dim);
  return Configuration(dim, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n * dim)));
}

Configuration LabeledPath::step_state(std::size_t k) const {
  const auto first = step_states.begin() + static_cast<std::ptrdiff_t>(k * n * dim);
  return Configuration(dim, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n * dim)));
}

LabeledPath evolve(const Configuration& initial, const DriftModel& model, const EvolveOptions& opts) {
  model.validate();
  if (!(opts.t_final >= 0.0)) throw DomainError("evolve: t_final must be >= 0");
  if (!(opts.dt > 0.0)) throw DomainError("evolve: dt must be > 0");
  if (opts.output_every < 1) throw DomainError("evolve: output_every must be >= 1");
  const double ratio = opts.t_final / opts.dt;
  const auto nsteps = static_cast<std::int64_t>(std::llround(ratio));
  if (std::fabs(ratio - static_cast<double>(nsteps)) > 1e-9 * std::max(1.0, ratio))
    throw DomainError("evolve: t_final must be an integer multiple of dt");

  SimState state = make_state(initial, model, opts.dt);
  const std::size_t n = initial.size();
  const int d = initial.dim();

  LabeledPath path;
  path.dim = d;
  path.n = n;
  path.seed = opts.seed;
  path.replica = opts.replica;
  path.stream_ids = opts.stream_ids;
  if (path.stream_ids.empty()) {
    path.stream_ids.resize(n);
    std::iota(path.stream_ids.begin(), path.stream_ids.end(), std::uint64_t{0});
  }
  if (path.stream_ids.size() != n) throw DomainError("evolve: one stream id per particle is required");
  path.order = state.order;
  path.dt_nominal = opts.dt;
  path.max_jump_fraction = opts.max_jump_fraction;
  path.has_noise = opts.record_noise;

  const BrownianSource noise(opts.seed, opts.replica, path.stream_ids, d, opts.dt);
  const StepOptions step_opts{opts.dt, opts.max_halvings, opts.max_jump_fraction};

  auto push_grid = [&](double t) {
    path.times.push_back(t);
    path.positions.insert(path.positions.end(), state.positions.coords().begin(), state.positions.coords().end());
  };
  push_grid(0.0);

  StepObserver observer;
  if (opts.record_noise) {
    observer = [&](const AcceptedStep& s) {
      path.step_t.push_back(s.t_start);
      path.step_dt.push_back(s.dt);
      path.step_states.insert(path.step_states.end(), s.state_before.begin(), s.state_before.end());
      path.increments.insert(path.increments.end(), s.increments.begin(), s.increments.end());
    };
  }

  for (std::int64_t k = 0; k < nsteps; ++k) {
    step(state, model, noise, k, step_opts, observer);
    if ((k + 1) % opts.output_every == 0 || k + 1 == nsteps) push_grid(opts.dt * static_cast<double>(k + 1));
  }
  if (opts.record_noise)
    path.step_states.insert(path.step_states.end(), state.positions.coords().begin(), state.positions.coords().end());

  path.diagnostics.accepted = state.stats.accepted;
  path.diagnostics.rejections = state.stats.rejections;
  path.diagnostics.deepest_level = state.stats.deepest_level;
  path.diagnostics.min_gap = std::min({state.stats.min_gap, min_gap(initial), min_gap(state.positions)});
  path.diagnostics.max_abs = state.stats.max_abs;
  for (double v : initial.coords()) path.diagnostics.max_abs = std::max(path.diagnostics.max_abs, std::fabs(v));
  return path;
}

std::vector<LabeledPath> evolve_many(const std::vector<Configuration>& initials, const DriftModel& model,
                                     const EvolveOptions& opts) {
  std::vector<LabeledPath> out(initials.size());
  parallel_for(initials.size(), [&](std::size_t r) {
    EvolveOptions o = opts;
    o.replica = r;
    out[r] = evolve(initials[r], model, o);
  });
  return out;
}

std::size_t count_invariant_violations(const LabeledPath& path, const DriftModel& model) {
  std::size_t bad = 0;
  auto check = [&](const std::vector<double>& flat, std::size_t states) {
    for (std::size_t s = 0; s < states; ++s) {
      const double* x = flat.data() + s * path.n * path.dim;
      bool ok = true;
      for (std::size_t q = 0; q < path.n * path.dim; ++q) ok = ok && std::isfinite(x[q]);
      if (path.dim == 1) {
        for (std::size_t k = 1; k < path.order.size(); ++k) ok = ok && x[path.order[k]] > x[path.order[k - 1]];
        if (model.family == DriftFamily::Bessel)
          for (std::size_t i = 0; i < path.n; ++i) ok = ok && x[i] > 0.0;
      }
      if (!ok) ++bad;
    }
  };
  check(path.positions, path.times.size());
  if (path.has_noise) check(path.step_states, path.step_dt.size() + 1);
  return bad;
}

}  // namespace ibmlab::dynamics
