#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "ibmlab/cli.hpp"
#include "ibmlab/ifc.hpp"
#include "ibmlab/kernels.hpp"
#include "ibmlab/measures.hpp"
#include "ibmlab/stats.hpp"
#include "internal.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace ibmlab::cli {

using dynamics::DriftFamily;
using dynamics::LabeledPath;
using ensembles::EnsembleFamily;

namespace detail {

ensembles::EnsembleSpec ensemble_spec(const RunConfig& c) {
  ensembles::EnsembleSpec s;
  if (c.ensemble == "auto") {
    s.family = EnsembleFamily::GaussianBeta;
    if (c.subcommand == "evolve" || c.subcommand == "ifc-check") {
      const auto f = dynamics::drift_family_from_string(c.model);
      if (f == DriftFamily::Bessel) s.family = EnsembleFamily::LaguerreBeta;
      if (f == DriftFamily::Ginibre1 || f == DriftFamily::Ginibre2) s.family = EnsembleFamily::Ginibre;
    }
  } else {
    s.family = ensembles::ensemble_family_from_string(c.ensemble);
  }
  s.n = c.n;
  s.beta = c.beta;
  s.a = c.a;
  s.seed = c.seed;
  return s;
}

dynamics::DriftModel drift_model(const RunConfig& c) {
  dynamics::DriftModel m;
  m.family = dynamics::drift_family_from_string(c.model);
  m.beta = c.beta;
  m.r = c.r;
  m.a = c.a;
  m.confinement = c.confinement;
  return m;
}

ensembles::ScalingMap scaling_map(const RunConfig& c, const std::string& regime) {
  return {ensembles::scaling_regime_from_string(regime), c.n, c.beta > 0.0 ? c.beta : 2.0};
}

std::optional<ensembles::ScalingMap> initial_scaling(const RunConfig& c) {
  std::string regime = c.init_scaling;
  if (regime == "auto") {
    const auto f = dynamics::drift_family_from_string(c.model);
    regime = f == DriftFamily::Airy ? "soft-edge" : f == DriftFamily::Bessel ? "hard-edge" : "none";
  }
  if (regime == "none") return std::nullopt;
  return scaling_map(c, regime);
}

Configuration initial_configuration(const RunConfig& c, std::uint64_t replica) {
  Configuration x = ensembles::sample(ensemble_spec(c), replica);
  if (const auto map = initial_scaling(c)) x = ensembles::rescale(x, *map);
  if (c.init_scale != 1.0)
    for (double& v : x.coords()) v *= c.init_scale;
  return x;
}

dynamics::EvolveOptions evolve_options(const RunConfig& c) {
  dynamics::EvolveOptions o;
  o.t_final = c.t;
  o.dt = c.dt;
  o.max_halvings = c.dt_min > 0.0 ? static_cast<int>(std::ceil(std::log2(c.dt / c.dt_min) - 1e-12)) : 20;
  o.max_jump_fraction = c.max_jump;
  o.output_every = c.output_every;
  o.seed = c.seed;
  o.record_noise = c.record_noise;
  return o;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str()) throw DomainError("not a number in list: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> parse_ms(const std::string& text, int n) {
  std::vector<std::size_t> ms;
  if (text == "all") {
    for (int m = 1; m <= n; ++m) ms.push_back(static_cast<std::size_t>(m));
    return ms;
  }
  for (double v : parse_list(text)) {
    if (v != std::floor(v) || v < 1 || v > n) {
      std::ostringstream msg;
      msg << "ms: head size " << v << " outside [1, " << n << "]";
      throw DomainError(msg.str());
    }
    ms.push_back(static_cast<std::size_t>(v));
  }
  if (ms.empty()) throw DomainError("ms: no head sizes given");
  return ms;
}

}  // namespace detail

namespace {

using detail::CsvWriter;

class Context {
 public:
  Context(fs::path dir, RunManifest& man) : dir_(std::move(dir)), man_(man) {}

  std::unique_ptr<CsvWriter> open(const std::string& name, const std::vector<std::string>& header) {
    files_.push_back(name);
    return std::make_unique<CsvWriter>(dir_ / name, header);
  }
  fs::path register_file(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }
  void diag(const std::string& key, double v) { man_.diagnostics.emplace_back(key, v); }
  void verdict(const std::string& name, double stat, double threshold, bool pass) {
    man_.verdicts.push_back({name, stat, threshold, pass});
  }
  void finish() {
    man_.outputs.clear();
    for (const auto& f : files_) {
      const fs::path p = dir_ / f;
      if (!fs::exists(p)) continue;
      man_.outputs.push_back({f, sha256_file(p), fs::file_size(p)});
    }
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  RunManifest& man_;
  std::vector<std::string> files_;
};

double or_default(double v, double fallback) { return std::isnan(v) ? fallback : v; }

std::vector<std::string> coord_header(std::vector<std::string> head, int dim, const std::string& prefix = "") {
  head.push_back(prefix + "x");
  if (dim == 2) head.push_back(prefix + "y");
  return head;
}

// ---------------------------------------------------------------- readers

nlohmann::json read_manifest_config(const fs::path& dir) {
  const fs::path p = dir / "manifest.json";
  if (!fs::exists(p)) return nlohmann::json::object();
  std::ifstream in(p);
  const auto j = nlohmann::json::parse(in);
  return j.contains("config") ? j["config"] : nlohmann::json::object();
}

double manifest_number(const nlohmann::json& cfg, const std::string& key, double fallback) {
  if (!cfg.contains(key)) return fallback;
  return std::strtod(cfg[key].get<std::string>().c_str(), nullptr);
}

std::vector<Configuration> load_samples(const fs::path& dir) {
  const CsvTable t = read_csv(dir / "samples.csv");
  const std::size_t rc = t.column("replica");
  const std::size_t xc = t.column("x");
  const bool planar = std::find(t.header.begin(), t.header.end(), "y") != t.header.end();
  const std::size_t yc = planar ? t.column("y") : 0;
  std::map<std::uint64_t, std::vector<double>> by_replica;
  for (const auto& row : t.rows) {
    auto& v = by_replica[static_cast<std::uint64_t>(row[rc])];
    v.push_back(row[xc]);
    if (planar) v.push_back(row[yc]);
  }
  std::vector<Configuration> out;
  for (auto& [r, v] : by_replica) out.emplace_back(planar ? 2 : 1, std::move(v));
  if (out.empty()) throw Error((dir / "samples.csv").string() + ": no samples");
  return out;
}

std::vector<LabeledPath> load_paths(const fs::path& dir) {
  const CsvTable t = read_csv(dir / "paths.csv");
  const std::size_t rc = t.column("replica"), tc = t.column("t"), ic = t.column("index"), xc = t.column("x");
  const bool planar = std::find(t.header.begin(), t.header.end(), "y") != t.header.end();
  const std::size_t yc = planar ? t.column("y") : 0;
  std::map<std::uint64_t, LabeledPath> by_replica;
  for (const auto& row : t.rows) {
    LabeledPath& p = by_replica[static_cast<std::uint64_t>(row[rc])];
    p.dim = planar ? 2 : 1;
    p.replica = static_cast<std::uint64_t>(row[rc]);
    if (row[ic] == 0.0) p.times.push_back(row[tc]);
    p.positions.push_back(row[xc]);
    if (planar) p.positions.push_back(row[yc]);
  }
  std::vector<LabeledPath> out;
  for (auto& [r, p] : by_replica) {
    p.n = p.positions.size() / (p.times.size() * static_cast<std::size_t>(p.dim));
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error((dir / "paths.csv").string() + ": no paths");
  return out;
}

LabeledPath load_noise(const fs::path& dir, std::uint64_t replica, const dynamics::DriftModel& model, double dt,
                       double max_jump) {
  const fs::path file = dir / "noise.csv";
  if (!fs::exists(file))
    throw ifc::MissingNoiseRecordError(file.string() + " not found; rerun evolve with --record-noise");
  const CsvTable t = read_csv(file);
  const std::size_t rc = t.column("replica"), sc = t.column("substep"), tc = t.column("t"), dc = t.column("dt"),
                    ic = t.column("index"), xc = t.column("x"), bxc = t.column("db_x");
  const bool planar = std::find(t.header.begin(), t.header.end(), "y") != t.header.end();
  const int d = planar ? 2 : 1;
  LabeledPath p;
  p.dim = d;
  p.replica = replica;
  p.dt_nominal = dt;
  p.max_jump_fraction = max_jump;
  p.has_noise = true;
  std::int64_t last_step = -1;
  std::size_t n = 0;
  std::vector<double> final_t;
  for (const auto& row : t.rows) {
    if (static_cast<std::uint64_t>(row[rc]) != replica) continue;
    const auto k = static_cast<std::int64_t>(row[sc]);
    if (k == 0) n = std::max(n, static_cast<std::size_t>(row[ic]) + 1);
    if (k != last_step) {
      if (row[dc] > 0.0) {
        p.step_t.push_back(row[tc]);
        p.step_dt.push_back(row[dc]);
      } else {
        final_t.push_back(row[tc]);
      }
      last_step = k;
    }
    p.step_states.push_back(row[xc]);
    if (planar) p.step_states.push_back(row[t.column("y")]);
    if (row[dc] > 0.0) {
      p.increments.push_back(row[bxc]);
      if (planar) p.increments.push_back(row[t.column("db_y")]);
    }
  }
  if (n == 0 || final_t.size() != 1)
    throw ifc::MissingNoiseRecordError(file.string() + ": no complete record for replica " + std::to_string(replica));
  p.n = n;
  if (p.step_states.size() != (p.steps() + 1) * n * d || p.increments.size() != p.steps() * n * d)
    throw Error(file.string() + ": inconsistent record for replica " + std::to_string(replica));
  const Configuration start(d, std::vector<double>(p.step_states.begin(), p.step_states.begin() + n * d));
  p.order = dynamics::make_state(start, model, dt).order;
  p.times = {0.0, final_t.front()};
  p.positions.assign(p.step_states.begin(), p.step_states.begin() + n * d);
  p.positions.insert(p.positions.end(), p.step_states.end() - n * d, p.step_states.end());
  return p;
}

// ------------------------------------------------------------ subcommands

void write_samples(Context& ctx, const std::vector<Configuration>& samples) {
  const int d = samples.front().dim();
  auto w = ctx.open("samples.csv", coord_header({"replica", "index"}, d));
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto& c = samples[r];
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (d == 1) {
        w->row({double(r), double(i), c.x(i)});
      } else {
        w->row({double(r), double(i), c.x(i), c.y(i)});
      }
    }
  }
  w->close();
}

void cmd_sample(const RunConfig& c, Context& ctx) {
  const auto spec = detail::ensemble_spec(c);
  auto samples = ensembles::sample_many(spec, c.replicas);
  if (c.scaling != "none") {
    const auto map = detail::scaling_map(c, c.scaling);
    for (auto& s : samples) s = ensembles::rescale(s, map);
  }
  write_samples(ctx, samples);
  ctx.diag("samples", double(samples.size()));
  ctx.diag("points", double(samples.size() * samples.front().size()));
}

void cmd_evolve(const RunConfig& c, Context& ctx) {
  const auto model = detail::drift_model(c);
  std::vector<Configuration> initials;
  for (std::uint64_t r = 0; r < c.replicas; ++r) initials.push_back(detail::initial_configuration(c, r));
  const auto opts = detail::evolve_options(c);
  const auto paths = dynamics::evolve_many(initials, model, opts);
  const int d = model.dim();

  auto w = ctx.open("paths.csv", coord_header({"replica", "t", "index"}, d));
  for (const auto& p : paths)
    for (std::size_t g = 0; g < p.grid_size(); ++g)
      for (std::size_t i = 0; i < p.n; ++i) {
        if (d == 1) {
          w->row({double(p.replica), p.times[g], double(i), p.coord(g, i)});
        } else {
          w->row({double(p.replica), p.times[g], double(i), p.coord(g, i, 0), p.coord(g, i, 1)});
        }
      }
  w->close();

  auto diag =
      ctx.open("diagnostics.csv", {"replica", "accepted", "rejections", "deepest_level", "min_gap", "max_abs", "violations"});
  double rejections = 0.0, min_gap = std::numeric_limits<double>::infinity(), violations = 0.0, deepest = 0.0;
  for (const auto& p : paths) {
    const double v = double(dynamics::count_invariant_violations(p, model));
    const auto& dg = p.diagnostics;
    diag->row({double(p.replica), double(dg.accepted), double(dg.rejections), double(dg.deepest_level), dg.min_gap,
               dg.max_abs, v});
    rejections += double(dg.rejections);
    min_gap = std::min(min_gap, dg.min_gap);
    deepest = std::max(deepest, double(dg.deepest_level));
    violations += v;
  }
  diag->close();

  if (c.record_noise) {
    std::vector<std::string> head = coord_header({"replica", "substep", "t", "dt", "index"}, d);
    head.push_back("db_x");
    if (d == 2) head.push_back("db_y");
    auto nw = ctx.open("noise.csv", head);
    std::vector<double> row;
    for (const auto& p : paths) {
      const std::size_t width = p.n * d;
      for (std::size_t k = 0; k <= p.steps(); ++k) {
        const bool last = k == p.steps();
        const double tk = last ? p.times.back() : p.step_t[k];
        const double dtk = last ? 0.0 : p.step_dt[k];
        for (std::size_t i = 0; i < p.n; ++i) {
          row = {double(p.replica), double(k), tk, dtk, double(i)};
          for (int q = 0; q < d; ++q) row.push_back(p.step_states[k * width + i * d + q]);
          for (int q = 0; q < d; ++q) row.push_back(last ? 0.0 : p.increments[k * width + i * d + q]);
          nw->row(row);
        }
      }
    }
    nw->close();
  }
  ctx.diag("rejections", rejections);
  ctx.diag("min_gap", min_gap);
  ctx.diag("deepest_level", deepest);
  ctx.diag("violations", violations);
  ctx.verdict("non-collision", violations, 0.0, violations == 0.0);
}

void cmd_ifc(const RunConfig& c, Context& ctx) {
  RunConfig eff = c;
  LabeledPath reference;
  if (!c.input.empty()) {
    // the reference run's own parameters take precedence
    const auto mc = read_manifest_config(c.input);
    if (mc.contains("model")) eff.model = mc["model"].get<std::string>();
    eff.beta = manifest_number(mc, "beta", eff.beta);
    eff.r = manifest_number(mc, "r", eff.r);
    eff.a = manifest_number(mc, "a", eff.a);
    eff.confinement = manifest_number(mc, "confinement", eff.confinement);
    eff.dt = manifest_number(mc, "dt", eff.dt);
    eff.max_jump = manifest_number(mc, "max-jump", eff.max_jump);
    reference = load_noise(c.input, c.replica, detail::drift_model(eff), eff.dt, eff.max_jump);
  } else {
    auto opts = detail::evolve_options(c);
    opts.record_noise = true;
    opts.replica = c.replica;
    reference = dynamics::evolve(detail::initial_configuration(c, c.replica), detail::drift_model(c), opts);
  }
  const auto model = detail::drift_model(eff);
  const auto ms = detail::parse_ms(c.ms, static_cast<int>(reference.n));
  const auto rows = ifc::consistency_report(reference, model, ms, c.epsilon);
  auto w = ctx.open("ifc.csv", {"m", "max_dev", "perturbed_dev", "epsilon"});
  double worst = 0.0;
  for (const auto& row : rows) {
    w->row({double(row.m), row.max_dev, row.perturbed_dev, row.epsilon});
    worst = std::max(worst, row.max_dev);
  }
  w->close();
  ctx.diag("substeps", double(reference.steps()));
  ctx.diag("max_dev", worst);
  ctx.verdict("ifc-exactness", worst, c.tolerance, worst <= c.tolerance);
}

void cmd_kernel(const RunConfig& c, Context& ctx) {
  const kernels::KernelSpec spec{kernels::kernel_family_from_string(c.kernel), c.a};
  std::vector<double> xs(static_cast<std::size_t>(c.points));
  for (int i = 0; i < c.points; ++i)
    xs[i] = c.points == 1 ? c.x_min : c.x_min + (c.x_max - c.x_min) * i / double(c.points - 1);
  const auto k = kernels::kernel_matrix(spec, c.s_time, xs, c.t_time, xs);
  auto w = ctx.open("kernel.csv", {"s", "x", "t", "y", "value"});
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j) w->row({c.s_time, xs[i], c.t_time, xs[j], k[i * xs.size() + j]});
  w->close();
  if (c.gap_hi > c.gap_lo) {
    const auto res =
        kernels::fredholm_det(spec, {{c.gap_lo, c.gap_hi}}, c.order, [](double) { return -1.0; }, c.tol);
    nlohmann::ordered_json j;
    j["family"] = c.kernel;
    j["domain"] = {c.gap_lo, c.gap_hi};
    j["order"] = res.order;
    j["value"] = res.value;
    j["refinement_error"] = res.refinement_error;
    std::ofstream(ctx.register_file("gap.json"), std::ios::binary) << j.dump(2) << "\n";
    ctx.diag("gap_probability", res.value);
    ctx.diag("refinement_error", res.refinement_error);
    ctx.verdict("grid-doubling", res.refinement_error, c.tol, res.refinement_error <= c.tol);
  }
}

void cmd_measures(const RunConfig& c, Context& ctx) {
  const auto spec = detail::ensemble_spec(c);
  if (c.measure == "ibp") {
    const auto field = measures::LogDerivativeField::for_ensemble(spec);
    const auto f = measures::TestFunction::gaussian_bump(c.center, c.width);
    const auto res = measures::verify_ibp(spec, field, f, c.replicas);
    auto w = ctx.open("ibp.csv", {"lhs", "rhs", "std_error", "replicas", "inconclusive"});
    w->row({res.lhs, res.rhs, res.std_error, double(res.replicas), res.inconclusive ? 1.0 : 0.0});
    w->close();
    const double gap = std::fabs(res.lhs - res.rhs);
    const double z = res.std_error > 0.0 ? gap / res.std_error : (gap == 0.0 ? 0.0 : HUGE_VAL);
    ctx.diag("std_error", res.std_error);
    ctx.verdict("ibp", z, 3.0, z <= 3.0);
  } else {
    const auto res = measures::quasi_gibbs_ratio(spec, c.window, c.m, c.replicas, c.grid_order);
    auto w = ctx.open("qg.csv", {"sample", "spread"});
    for (std::size_t i = 0; i < res.spreads.size(); ++i) w->row({double(i), res.spreads[i]});
    w->close();
    ctx.diag("conditioned_samples", double(res.spreads.size()));
    ctx.diag("ratio_min", res.ratio_min);
    ctx.diag("ratio_max", res.ratio_max);
    ctx.diag("spread_q10", res.spread_q10);
    ctx.diag("spread_q50", res.spread_q50);
    ctx.diag("spread_q90", res.spread_q90);
    ctx.diag("spread_max", res.spread_max);
  }
}

void write_histogram(Context& ctx, const std::string& name, const stats::HistogramEstimate& h,
                     const std::function<double(double, double)>& reference) {
  auto w = ctx.open(name, {"lo", "hi", "count", "value", "reference"});
  for (std::size_t b = 0; b < h.bins(); ++b)
    w->row({h.edges[b], h.edges[b + 1], h.counts[b], h.values[b], reference(h.edges[b], h.edges[b + 1])});
  w->close();
}

void cmd_stats(const RunConfig& c, Context& ctx) {
  const fs::path in = c.input;
  const auto mc = read_manifest_config(in);
  const double beta = manifest_number(mc, "beta", c.beta);
  if (c.test == "density" || c.test == "spacing") {
    if (mc.contains("scaling") && mc["scaling"].get<std::string>() != "none")
      throw DomainError("stats " + c.test + " expects unscaled samples");
    auto samples = load_samples(in);
    const int n = static_cast<int>(samples.front().size());
    if (samples.front().dim() == 2) {
      if (c.test == "spacing") throw DomainError("spacing test needs 1-D samples");
      std::vector<double> radial;
      for (const auto& s : samples)
        for (std::size_t i = 0; i < s.size(); ++i) radial.push_back(std::hypot(s.x(i), s.y(i)) / std::sqrt(double(n)));
      const auto h = stats::histogram(radial, stats::uniform_edges(0.0, 1.0, c.bins), stats::Normalization::Density,
                                      samples.size());
      std::vector<double> expected;
      for (std::size_t b = 0; b < h.bins(); ++b) expected.push_back(h.edges[b + 1] * h.edges[b + 1] - h.edges[b] * h.edges[b]);
      const auto chi = stats::chi_square(h.counts, expected);
      write_histogram(ctx, "density.csv", h, [](double lo, double hi) { return (hi * hi - lo * lo) / (hi - lo); });
      const double th = or_default(c.threshold, 0.01);
      ctx.diag("chi_square", chi.statistic);
      ctx.verdict("circular-law-chi2-p", chi.p_value, th, chi.p_value > th);
      return;
    }
    const double to_unit = std::sqrt(2.0 / (beta > 0.0 ? beta : 2.0));
    for (auto& s : samples)
      for (double& v : s.coords()) v *= to_unit;
    if (c.test == "density") {
      std::vector<double> x;
      for (const auto& s : samples)
        for (double v : s.coords()) x.push_back(v / std::sqrt(double(n)));
      const auto ks = stats::ks_one_sample(x, ensembles::semicircle_cdf);
      const auto h = stats::histogram(x, stats::uniform_edges(-2.0, 2.0, c.bins), stats::Normalization::Density,
                                      samples.size());
      write_histogram(ctx, "density.csv", h, [](double lo, double hi) {
        return (ensembles::semicircle_cdf(hi) - ensembles::semicircle_cdf(lo)) / (hi - lo);
      });
      const double th = or_default(c.threshold, 0.03);
      ctx.diag("ks_p_value", ks.p_value);
      ctx.verdict("semicircle-ks", ks.statistic, th, ks.statistic <= th);
    } else {
      const double half = c.window_fraction * 2.0 * std::sqrt(double(n));
      std::vector<double> spacings;
      const auto h = stats::spacing_distribution(samples, {-half, half}, stats::semicircle_unfolding(n),
                                                 stats::uniform_edges(0.0, 4.0, c.bins), &spacings);
      const double d = stats::sup_distance(h, stats::wigner_surmise_cdf);
      write_histogram(ctx, "spacing.csv", h, [](double lo, double hi) {
        return (stats::wigner_surmise_cdf(hi) - stats::wigner_surmise_cdf(lo)) / (hi - lo);
      });
      const double th = or_default(c.threshold, 0.05);
      ctx.diag("spacings", double(spacings.size()));
      ctx.verdict("surmise-sup-distance", d, th, d <= th);
    }
  } else if (c.test == "number-variance") {
    const auto samples = load_samples(in);
    const auto radii = detail::parse_list(c.radii);
    const auto rows = stats::number_variance(samples, radii);
    auto w = ctx.open("number_variance.csv", {"radius", "mean", "variance"});
    std::vector<double> rs, vs;
    for (const auto& r : rows) {
      w->row({r.radius, r.mean, r.variance});
      rs.push_back(r.radius);
      vs.push_back(r.variance);
    }
    w->close();
    const auto fit = stats::fit_power_law(rs, vs);
    ctx.diag("exponent", fit.exponent);
    ctx.diag("fit_residual", fit.residual);
    ctx.verdict("nv-exponent-below-2", fit.exponent, 2.0, fit.exponent < 2.0);
    const double th = or_default(c.threshold, 0.3);
    ctx.verdict("nv-exponent-near-1", std::fabs(fit.exponent - 1.0), th, std::fabs(fit.exponent - 1.0) <= th);
  } else if (c.test == "stationarity") {
    const auto paths = load_paths(in);
    stats::PermutationOptions opts;
    opts.permutations = c.permutations;
    opts.seed = c.seed;
    std::vector<Configuration> eq;
    bool paired = false;
    if (c.equilibrium == "initial") {
      for (const auto& p : paths) eq.push_back(p.at(0));
      paired = true;
    } else {
      eq = load_samples(c.equilibrium);
    }
    if (c.pairing != "auto") paired = c.pairing == "paired";
    opts.pairing = paired ? stats::Pairing::Paired : stats::Pairing::Unpaired;
    const auto res = stats::stationarity_test(paths, eq, opts);
    auto w = ctx.open("stationarity.csv", {"statistic", "p_value", "replicas", "permutations"});
    w->row({res.statistic, res.p_value, double(paths.size()), double(c.permutations)});
    w->close();
    const double th = or_default(c.threshold, 0.08);
    ctx.diag("p_value", res.p_value);
    ctx.verdict("stationarity-ks", res.statistic, th, res.statistic <= th);
  } else {
    const auto paths = load_paths(in);
    const auto fit = stats::msd_tagged(paths, stats::TagSelection::Bulk, 0, static_cast<std::size_t>(c.lag_points),
                                       c.min_replicas);
    auto w = ctx.open("msd.csv", {"lag", "msd"});
    for (std::size_t i = 0; i < fit.lags.size(); ++i) w->row({fit.lags[i], fit.msd[i]});
    w->close();
    const double th = or_default(c.threshold, 0.95);
    ctx.diag("fit_residual", fit.residual);
    ctx.verdict("msd-exponent", fit.exponent, th, fit.exponent < th);
  }
}

std::string canonical_hash(const RunConfig& c) {
  std::string text = c.subcommand + "\n";
  for (const auto& [k, v] : c.to_key_values())
    if (k != "out") text += k + "=" + v + "\n";
  return sha256_hex(text);
}

}  // namespace

RunManifest run(const RunConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = config.out;
  fs::create_directories(dir);
  RunManifest man;
  man.config = config;
  man.config_hash = canonical_hash(config);
  Context ctx(dir, man);

  auto finish = [&] {
    ctx.finish();
    man.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream(dir / "manifest.json", std::ios::binary) << man.to_json();
  };
  try {
    const std::string& s = config.subcommand;
    if (s == "sample") cmd_sample(config, ctx);
    else if (s == "evolve") cmd_evolve(config, ctx);
    else if (s == "ifc-check") cmd_ifc(config, ctx);
    else if (s == "kernel") cmd_kernel(config, ctx);
    else if (s == "measures") cmd_measures(config, ctx);
    else cmd_stats(config, ctx);
  } catch (const std::exception& e) {
    man.complete = false;
    man.error = config.subcommand + ": " + e.what();
    finish();
    throw;
  }
  man.complete = true;
  finish();
  return man;
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "ibmlab: " << e.what() << "\n";
    return 2;
  }
  RunManifest man;
  try {
    man = run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "ibmlab: " << e.what() << "\n";
    return 1;
  }
  bool ok = true;
  for (const auto& v : man.verdicts) {
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << " statistic=" << format_double(v.statistic)
              << " threshold=" << format_double(v.threshold) << "\n";
    ok = ok && v.pass;
  }
  std::cout << "manifest: " << (fs::path(cfg.out) / "manifest.json").string() << "\n";
  return ok ? 0 : 3;
}

}  // namespace ibmlab::cli
