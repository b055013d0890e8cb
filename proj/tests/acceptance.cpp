// Acceptance suite: criteria 1-9, one PASS/FAIL line each.
// Runs the CLI subcommands in-process and checks their verdicts, plus a few
// library-level checks that have no subcommand of their own.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "ibmlab/cli.hpp"
#include "ibmlab/dynamics.hpp"
#include "ibmlab/ensembles.hpp"
#include "ibmlab/kernels.hpp"
#include "ibmlab/rng.hpp"
#include "ibmlab/stats.hpp"
#include "json.hpp"

using namespace ibmlab;
namespace fs = std::filesystem;

namespace {

struct Recorded {
  std::string name;
  std::vector<std::string> args;
  cli::RunManifest manifest;
  bool rerun = true;
};

class Suite {
 public:
  explicit Suite(fs::path root) : root_(std::move(root)) {}

  const cli::RunManifest& go(const std::string& name, std::vector<std::string> args, bool rerun = true) {
    const fs::path dir = root_ / name;
    fs::remove_all(dir);
    auto full = args;
    full.push_back("--out");
    full.push_back(dir.string());
    auto m = cli::run(cli::parse_config(full));
    runs_.push_back({name, std::move(args), std::move(m), rerun});
    return runs_.back().manifest;
  }

  fs::path dir(const std::string& name) const { return root_ / name; }
  const fs::path& root() const { return root_; }
  const std::deque<Recorded>& runs() const { return runs_; }

 private:
  fs::path root_;
  std::deque<Recorded> runs_;  // stable references for go()
};

const cli::Verdict& verdict(const cli::RunManifest& m, const std::string& name) {
  for (const auto& v : m.verdicts)
    if (v.name == name) return v;
  throw Error("manifest has no verdict '" + name + "'");
}

double diag(const cli::RunManifest& m, const std::string& key) {
  for (const auto& [k, v] : m.diagnostics)
    if (k == key) return v;
  throw Error("manifest has no diagnostic '" + key + "'");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------

Outcome stationarity(Suite& s) {
  const std::vector<std::string> common{"evolve", "--model", "dyson", "--ensemble", "gaussian", "--beta", "2", "--n",
                                        "64", "--confinement", "1", "--t", "0.1", "--dt", "1e-4", "--output-every",
                                        "1000", "--replicas", "200"};
  auto eq = common;
  eq.insert(eq.end(), {"--seed", "2001"});
  s.go("c2_evolve_gue", eq);
  const auto& st = s.go("c2_stats_gue", {"stats", "--test", "stationarity", "--input", s.dir("c2_evolve_gue").string(),
                                         "--threshold", "0.08", "--seed", "2"});
  const auto& v = verdict(st, "stationarity-ks");

  // negative control: compressed start against independent equilibrium draws
  auto neg = common;
  neg.insert(neg.end(), {"--seed", "2002", "--init-scale", "0.1"});
  s.go("c2_evolve_compressed", neg);
  s.go("c2_sample_gue", {"sample", "--ensemble", "gaussian", "--beta", "2", "--n", "64", "--replicas", "200", "--seed",
                         "2003"});
  const auto& nc = s.go("c2_stats_compressed",
                        {"stats", "--test", "stationarity", "--input", s.dir("c2_evolve_compressed").string(),
                         "--equilibrium", s.dir("c2_sample_gue").string(), "--threshold", "0.08", "--seed", "2"});
  const double p = diag(nc, "p_value");
  const bool pass = v.pass && p < 0.01;
  return {pass, "KS=" + num(v.statistic) + " (<= 0.08); control KS=" + num(verdict(nc, "stationarity-ks").statistic) +
                    " p=" + num(p) + " (< 0.01)"};
}

Outcome semicircle_surmise(Suite& s) {
  s.go("c3_sample_n1000", {"sample", "--ensemble", "gaussian", "--beta", "2", "--n", "1000", "--replicas", "4",
                           "--seed", "3001"});
  const auto& d = s.go("c3_stats_density",
                       {"stats", "--test", "density", "--input", s.dir("c3_sample_n1000").string(), "--threshold", "0.03"});
  s.go("c3_sample_n200", {"sample", "--ensemble", "gaussian", "--beta", "2", "--n", "200", "--replicas", "500",
                          "--seed", "3002"});
  const auto& sp = s.go("c3_stats_spacing", {"stats", "--test", "spacing", "--input", s.dir("c3_sample_n200").string(),
                                             "--bins", "40", "--window-fraction", "0.5", "--threshold", "0.05"});
  const auto& a = verdict(d, "semicircle-ks");
  const auto& b = verdict(sp, "surmise-sup-distance");
  return {a.pass && b.pass, "semicircle KS=" + num(a.statistic) + " (<= 0.03); surmise sup=" + num(b.statistic) +
                                " (<= 0.05) over " + num(diag(sp, "spacings")) + " spacings"};
}

Outcome ifc_exactness(Suite& s) {
  s.go("c4_evolve", {"evolve", "--model", "dyson", "--beta", "2", "--n", "8", "--t", "0.05", "--dt", "1e-3",
                     "--record-noise", "--seed", "4001"});
  const auto& m = s.go("c4_ifc", {"ifc-check", "--input", s.dir("c4_evolve").string(), "--ms", "1,4,7,8",
                                  "--tolerance", "1e-12", "--epsilon", "1e-3"});
  const auto& v = verdict(m, "ifc-exactness");
  const auto t = cli::read_csv(s.dir("c4_ifc") / "ifc.csv");
  std::string per;
  for (const auto& row : t.rows)
    per += " m=" + num(row[t.column("m")]) + ":" + num(row[t.column("max_dev")]) + "/" +
           num(row[t.column("perturbed_dev")]);
  return {v.pass && t.rows.size() == 4, "max deviation " + num(v.statistic) + " (<= 1e-12); dev/perturbed" + per};
}

Outcome kernel_identities(Suite& s) {
  using namespace kernels;
  PhiloxEngine eng(derive_key(5001, 0));
  double worst = 0.0;
  int pairs = 0;
  while (pairs < 100) {
    const double x = -3 + 6 * eng.uniform(), y = -3 + 6 * eng.uniform();
    if (std::fabs(x - y) <= 1e-3) continue;
    worst = std::max(worst, std::fabs(eval_kernel(KernelSpec::extended_airy(), 0.0, x, 0.0, y) - airy_kernel(x, y)));
    ++pairs;
  }
  const auto& m = s.go("c5_sine_gap", {"kernel", "--kernel", "sine", "--points", "21", "--gap-lo", "0", "--gap-hi",
                                       "0.01", "--order", "20", "--tol", "1e-6"});
  s.go("c5_extended_airy_grid", {"kernel", "--kernel", "extended-airy", "--s-time", "0", "--t-time", "0.5",
                                 "--points", "13"});
  const double gap = diag(m, "gap_probability");
  const auto& g = verdict(m, "grid-doubling");
  const bool pass = worst <= 1e-8 && std::fabs(gap - 0.99) <= 1e-3 && g.pass;
  return {pass, "extended vs equal-time max|d|=" + num(worst) + " (<= 1e-8); gap(0.01)=" + num(gap) +
                    " (|.-0.99| <= 1e-3); grid doubling " + num(g.statistic) + " (<= 1e-6)"};
}

Outcome ibp(Suite& s) {
  const auto& m8 = s.go("c6_ibp_n8", {"measures", "--measure", "ibp", "--ensemble", "gaussian", "--beta", "2", "--n",
                                      "8", "--replicas", "1000000", "--center", "0.5", "--width", "0.7", "--seed",
                                      "6001"},
                        false);
  const auto& m1 = s.go("c6_ibp_n1", {"measures", "--measure", "ibp", "--ensemble", "gaussian", "--beta", "2", "--n",
                                      "1", "--replicas", "1000000", "--center", "0.5", "--width", "0.7", "--seed",
                                      "6002"},
                        false);
  const auto& v8 = verdict(m8, "ibp");
  const auto& v1 = verdict(m1, "ibp");
  // N = 1: both sides equal E X f(X) for a standard normal, in closed form
  const double c = 0.5, w = 0.7;
  const double exact = c / (1 + w * w) * w / std::sqrt(1 + w * w) * std::exp(-c * c / (2 * (1 + w * w)));
  const auto t = cli::read_csv(s.dir("c6_ibp_n1") / "ibp.csv");
  const double lhs = t.rows.at(0)[t.column("lhs")], rhs = t.rows.at(0)[t.column("rhs")];
  // |f'| <= 1 / (w sqrt(e)) bounds the per-sample spread of the lhs
  const double band = 3.0 / (w * std::sqrt(std::exp(1.0))) / std::sqrt(1e6);
  const bool closed = std::fabs(lhs - exact) <= band && std::fabs(rhs - exact) <= 3.0 * band;
  return {v8.pass && v1.pass && closed, "N=8 z=" + num(v8.statistic) + " (<= 3); N=1 z=" + num(v1.statistic) +
                                            ", lhs=" + num(lhs) + " rhs=" + num(rhs) + " exact=" + num(exact)};
}

Outcome ginibre_coincidence() {
  using namespace dynamics;
  const int n = 500;
  const std::size_t samples = 8;
  const double bulk = 0.25 * std::sqrt(double(n));
  const std::vector<double> radii{2, 4, 8, 16};
  const auto configs = ensembles::sample_many({ensembles::EnsembleFamily::Ginibre, n, 2.0, 1.0, 7001}, samples);
  std::vector<double> msd;
  for (double r : radii) {
    const DriftModel g1{DriftFamily::Ginibre1, 2.0, r}, g2{DriftFamily::Ginibre2, 2.0, r};
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& c : configs)
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (std::hypot(c.x(i), c.y(i)) >= bulk) continue;
        const auto a = drift(g1, i, c), b = drift(g2, i, c);
        sum += (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
        ++count;
      }
    msd.push_back(sum / double(count));
  }
  bool decreasing = true;
  std::string text;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k > 0 && !(msd[k] < msd[k - 1])) decreasing = false;
    text += (k ? ", " : "") + std::string("r=") + num(radii[k]) + ":" + num(msd[k]);
  }
  return {decreasing, "mean |b1-b2|^2 " + text};
}

Outcome rigidity(Suite& s) {
  // number variance
  s.go("c8_sample_ginibre", {"sample", "--ensemble", "ginibre", "--n", "500", "--replicas", "200", "--seed", "8001"});
  const auto& nv = s.go("c8_stats_nv", {"stats", "--test", "number-variance", "--input",
                                        s.dir("c8_sample_ginibre").string(), "--radii", "2,3,4,5,6,8,10,12,14",
                                        "--threshold", "0.3"});
  const auto& below = verdict(nv, "nv-exponent-below-2");
  const auto& near = verdict(nv, "nv-exponent-near-1");

  // Poisson control with the same radii: count in a disk has variance R^2 exactly
  PhiloxEngine eng(derive_key(8002, 0));
  const double L = std::sqrt(500.0);
  std::vector<Configuration> poisson;
  for (int r = 0; r < 200; ++r) {
    std::poisson_distribution<int> count(L * L);
    const int k = count(eng);
    std::vector<double> xy;
    for (int i = 0; i < k; ++i) {
      const double rad = L * std::sqrt(eng.uniform_open0()), th = 2 * M_PI * eng.uniform();
      xy.push_back(rad * std::cos(th));
      xy.push_back(rad * std::sin(th));
    }
    poisson.emplace_back(2, xy);
  }
  const std::vector<double> radii{2, 3, 4, 5, 6, 8, 10, 12, 14};
  std::vector<double> vs;
  for (const auto& row : stats::number_variance(poisson, radii, L)) vs.push_back(row.variance);
  const double poisson_exp = stats::fit_power_law(radii, vs).exponent;

  // tagged-particle MSD for Ginibre2 and a non-interacting calibration run
  s.go("c8_evolve_ginibre2", {"evolve", "--model", "ginibre2", "--n", "256", "--t", "1", "--dt", "1e-3",
                              "--output-every", "10", "--replicas", "100", "--seed", "8003"},
       false);
  const auto& msd = s.go("c8_stats_msd", {"stats", "--test", "msd", "--input", s.dir("c8_evolve_ginibre2").string(),
                                          "--min-replicas", "50", "--threshold", "0.95"});
  s.go("c8_evolve_free", {"evolve", "--model", "ginibre1", "--r", "1e-9", "--n", "16", "--t", "1", "--dt", "1e-3",
                          "--output-every", "10", "--replicas", "1000", "--seed", "8004"});
  const auto& free = s.go("c8_stats_free", {"stats", "--test", "msd", "--input", s.dir("c8_evolve_free").string(),
                                            "--min-replicas", "50", "--threshold", "1.05"});
  const double g_exp = verdict(msd, "msd-exponent").statistic;
  const double f_exp = verdict(free, "msd-exponent").statistic;
  const bool pass = below.pass && near.pass && std::fabs(poisson_exp - 2.0) <= 0.1 && g_exp < 0.95 &&
                    std::fabs(f_exp - 1.0) <= 0.05;
  return {pass, "NV exponent " + num(below.statistic) + " (< 2, |.-1| <= 0.3), Poisson " + num(poisson_exp) +
                    " (~2); MSD exponent " + num(g_exp) + " (< 0.95), free " + num(f_exp) + " (1 +- 0.05)"};
}

Outcome non_collision(const Suite& s) {
  double violations = 0.0;
  int runs = 0;
  bool verdicts_ok = true;
  for (const auto& r : s.runs()) {
    if (r.manifest.config.subcommand != "evolve") continue;
    ++runs;
    violations += diag(r.manifest, "violations");
    verdicts_ok = verdicts_ok && verdict(r.manifest, "non-collision").pass;
  }
  return {runs > 0 && violations == 0.0 && verdicts_ok,
          num(violations) + " violating states over " + std::to_string(runs) + " evolve runs"};
}

Outcome determinism(Suite& s) {
  int files = 0, reruns = 0;
  std::string mismatch;
  for (const auto& r : s.runs()) {
    if (!r.rerun) continue;
    const fs::path dir = s.root() / "rerun" / r.name;
    fs::remove_all(dir);
    auto args = r.args;
    args.push_back("--out");
    args.push_back(dir.string());
    const auto m = cli::run(cli::parse_config(args));
    ++reruns;
    for (const auto& o : r.manifest.outputs) {
      if (fs::path(o.path).extension() != ".csv") continue;
      ++files;
      const auto again = cli::sha256_file(dir / o.path);
      if (again != o.sha256) mismatch += " " + r.name + "/" + o.path;
    }
    if (m.config_hash != r.manifest.config_hash) mismatch += " " + r.name + "(config)";
  }
  return {mismatch.empty() && files > 0, std::to_string(files) + " CSV files from " + std::to_string(reruns) +
                                             " reruns byte-identical" + (mismatch.empty() ? "" : "; differ:" + mismatch)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ibmlab acceptance suite"};
  std::string out = "acceptance_runs";
  app.add_option("--out", out, "directory for run outputs");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);
  Suite suite(out);

  std::map<int, Outcome> results;
  const std::map<int, std::string> names{{1, "non-collision"},      {2, "stationarity"},  {3, "semicircle-surmise"},
                                         {4, "ifc-exactness"},      {5, "kernel-identities"}, {6, "ibp"},
                                         {7, "ginibre-coincidence"}, {8, "rigidity"},      {9, "determinism"}};
  auto attempt = [&](int id, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      results[id] = body();
    } catch (const std::exception& e) {
      results[id] = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results[id].detail += " [" + num(sec) + " s]";
    std::fprintf(stderr, "criterion %d done in %.1f s\n", id, sec);
  };

  attempt(2, [&] { return stationarity(suite); });
  attempt(3, [&] { return semicircle_surmise(suite); });
  attempt(4, [&] { return ifc_exactness(suite); });
  attempt(5, [&] { return kernel_identities(suite); });
  attempt(6, [&] { return ibp(suite); });
  attempt(7, [&] { return ginibre_coincidence(); });
  attempt(8, [&] { return rigidity(suite); });
  attempt(1, [&] { return non_collision(suite); });
  attempt(9, [&] { return determinism(suite); });

  bool all = true;
  for (const auto& [id, r] : results) {
    std::printf("%s criterion %d %s: %s\n", r.pass ? "PASS" : "FAIL", id, names.at(id).c_str(), r.detail.c_str());
    all = all && r.pass;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
