#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "ibmlab/cli.hpp"
#include "ibmlab/dynamics.hpp"
#include "ibmlab/ensembles.hpp"
#include "ibmlab/kernels.hpp"
#include "internal.hpp"

namespace ibmlab::cli {

namespace {

enum Group : unsigned {
  kSample = 1u,
  kEvolve = 2u,
  kIfc = 4u,
  kKernel = 8u,
  kMeasures = 16u,
  kStats = 32u,
  kAll = 63u,
};

using Member = std::variant<int RunConfig::*, double RunConfig::*, std::uint64_t RunConfig::*, std::string RunConfig::*,
                            bool RunConfig::*>;

struct Field {
  const char* key;
  Member member;
  unsigned groups;
  const char* help;
};

constexpr unsigned kEnsembleUsers = kSample | kEvolve | kIfc | kMeasures;
constexpr unsigned kDynamicsUsers = kEvolve | kIfc;

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"ensemble", &RunConfig::ensemble, kEnsembleUsers, "gaussian | ginibre | laguerre | auto"},
      {"n", &RunConfig::n, kEnsembleUsers, "number of particles / matrix size"},
      {"beta", &RunConfig::beta, kEnsembleUsers, "inverse temperature"},
      {"a", &RunConfig::a, kEnsembleUsers | kKernel, "Bessel / Laguerre parameter (a >= 1)"},
      {"scaling", &RunConfig::scaling, kSample, "none | bulk | soft-edge | hard-edge | ginibre-bulk"},
      {"model", &RunConfig::model, kDynamicsUsers, "dyson | airy | bessel | ginibre1 | ginibre2"},
      {"r", &RunConfig::r, kDynamicsUsers, "interaction truncation radius"},
      {"confinement", &RunConfig::confinement, kDynamicsUsers, "extra -(c/2) x drift for 1-D models"},
      {"init-scaling", &RunConfig::init_scaling, kDynamicsUsers, "scaling of the initial sample (auto picks by model)"},
      {"init-scale", &RunConfig::init_scale, kDynamicsUsers, "factor applied to the initial configuration"},
      {"t", &RunConfig::t, kDynamicsUsers, "time horizon T"},
      {"dt", &RunConfig::dt, kDynamicsUsers, "nominal step"},
      {"dt-min", &RunConfig::dt_min, kDynamicsUsers, "smallest halved step (0: dt * 2^-20)"},
      {"output-every", &RunConfig::output_every, kDynamicsUsers, "output grid spacing in nominal steps"},
      {"max-jump", &RunConfig::max_jump, kDynamicsUsers, "planar jump limit as a fraction of the nearest distance"},
      {"record-noise", &RunConfig::record_noise, kEvolve, "write accepted sub-steps and increments to noise.csv"},
      {"seed", &RunConfig::seed, kAll, "master seed"},
      {"replicas", &RunConfig::replicas, kSample | kEvolve | kMeasures, "number of replicas / samples"},
      {"out", &RunConfig::out, kAll, "output directory"},
      {"input", &RunConfig::input, kIfc | kStats, "directory written by a previous run"},
      {"ms", &RunConfig::ms, kIfc, "head sizes, comma separated, or 'all'"},
      {"epsilon", &RunConfig::epsilon, kIfc, "tail perturbation"},
      {"replica", &RunConfig::replica, kIfc, "replica of the reference run"},
      {"tolerance", &RunConfig::tolerance, kIfc, "pass threshold for the unperturbed deviation"},
      {"kernel", &RunConfig::kernel, kKernel, "sine | airy | extended-airy | bessel | ginibre"},
      {"s-time", &RunConfig::s_time, kKernel, "first time argument"},
      {"t-time", &RunConfig::t_time, kKernel, "second time argument"},
      {"x-min", &RunConfig::x_min, kKernel, "grid start"},
      {"x-max", &RunConfig::x_max, kKernel, "grid end"},
      {"points", &RunConfig::points, kKernel, "grid points per axis"},
      {"gap-lo", &RunConfig::gap_lo, kKernel, "gap interval start"},
      {"gap-hi", &RunConfig::gap_hi, kKernel, "gap interval end (gap-hi > gap-lo enables the determinant)"},
      {"order", &RunConfig::order, kKernel, "Gauss-Legendre nodes per interval"},
      {"tol", &RunConfig::tol, kKernel, "grid-doubling tolerance"},
      {"measure", &RunConfig::measure, kMeasures, "ibp | qg-ratio"},
      {"center", &RunConfig::center, kMeasures, "test function centre"},
      {"width", &RunConfig::width, kMeasures, "test function width"},
      {"window", &RunConfig::window, kMeasures, "window radius r for qg-ratio"},
      {"m", &RunConfig::m, kMeasures, "points inside the window for qg-ratio"},
      {"grid-order", &RunConfig::grid_order, kMeasures, "quadrature nodes per axis for qg-ratio"},
      {"test", &RunConfig::test, kStats, "density | spacing | number-variance | stationarity | msd"},
      {"equilibrium", &RunConfig::equilibrium, kStats, "'initial' or a sample directory"},
      {"radii", &RunConfig::radii, kStats, "disk radii, comma separated"},
      {"bins", &RunConfig::bins, kStats, "histogram bins"},
      {"window-fraction", &RunConfig::window_fraction, kStats, "central fraction of the support for spacings"},
      {"threshold", &RunConfig::threshold, kStats, "verdict threshold (nan: test default)"},
      {"permutations", &RunConfig::permutations, kStats, "permutations for the stationarity p-value"},
      {"pairing", &RunConfig::pairing, kStats, "auto | paired | unpaired"},
      {"min-replicas", &RunConfig::min_replicas, kStats, "minimum replicas for msd"},
      {"lag-points", &RunConfig::lag_points, kStats, "log-spaced lags for msd"},
  };
  return table;
}

const std::vector<std::pair<std::string, unsigned>>& subcommands() {
  static const std::vector<std::pair<std::string, unsigned>> list = {
      {"sample", kSample}, {"evolve", kEvolve},     {"ifc-check", kIfc},
      {"kernel", kKernel}, {"measures", kMeasures}, {"stats", kStats},
  };
  return list;
}

unsigned group_of(const std::string& sub) {
  for (const auto& [name, g] : subcommands())
    if (name == sub) return g;
  return 0;
}

const char* subcommand_help(const std::string& name) {
  if (name == "sample") return "draw ensemble configurations";
  if (name == "evolve") return "simulate a truncated ISDE";
  if (name == "ifc-check") return "frozen-tail consistency check";
  if (name == "kernel") return "evaluate a correlation kernel and gap determinant";
  if (name == "measures") return "integration by parts and quasi-Gibbs diagnostics";
  return "estimators and hypothesis tests on previous outputs";
}

std::string show(const RunConfig& c, const Member& m) {
  return std::visit(
      [&](auto ptr) -> std::string {
        using T = std::remove_cvref_t<decltype(c.*ptr)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return c.*ptr;
        } else if constexpr (std::is_same_v<T, bool>) {
          return c.*ptr ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(c.*ptr);
        } else {
          return std::to_string(c.*ptr);
        }
      },
      m);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool flag_given(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::to_key_values() const {
  const unsigned g = group_of(subcommand);
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& f : fields())
    if (g == 0 || (f.groups & g)) kv.emplace_back(f.key, show(*this, f.member));
  return kv;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << path.string() << ":" << lineno << ": expected key = value";
      throw ConfigError(msg.str());
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    std::replace(key.begin(), key.end(), '_', '-');
    kv.emplace_back(key, value);
  }
  return kv;
}

RunConfig parse_config(const std::vector<std::string>& args_in) {
  std::vector<std::string> args = args_in;
  if (args.empty()) throw ConfigError("missing subcommand (sample, evolve, ifc-check, kernel, measures or stats)");
  if (args.front() == "--help" || args.front() == "-h") {
    std::ostringstream msg;
    msg << "usage: ibmlab <subcommand> [--key value ...] [--config file]\nsubcommands:\n";
    for (const auto& [name, g] : subcommands()) msg << "  " << name << "  " << subcommand_help(name) << "\n";
    throw HelpRequested(msg.str());
  }
  const std::string sub = args.front();
  const unsigned group = group_of(sub);
  if (group == 0)
    throw ConfigError("unknown subcommand '" + sub + "' (expected sample, evolve, ifc-check, kernel, measures or stats)");

  // pull --config out and inject its keys where no flag was given
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file name");
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config_path.empty()) {
    const auto given = args;
    for (const auto& [key, value] : read_config_file(config_path)) {
      const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return key == f.key; });
      if (it == fields().end() || !(it->groups & group))
        throw ConfigError("unknown config key '" + key + "' for subcommand " + sub);
      if (!flag_given(given, key)) args.push_back("--" + key + "=" + value);
    }
  }

  RunConfig cfg;
  CLI::App app{"ibmlab"};
  app.require_subcommand(1);
  CLI::App* cmd = app.add_subcommand(sub, subcommand_help(sub));
  for (const auto& f : fields()) {
    if (!(f.groups & group)) continue;
    const std::string name = std::string("--") + f.key;
    std::visit(
        [&](auto ptr) {
          using T = std::remove_cvref_t<decltype(cfg.*ptr)>;
          if constexpr (std::is_same_v<T, bool>) {
            cmd->add_flag(name, cfg.*ptr, f.help);
          } else {
            cmd->add_option(name, cfg.*ptr, f.help);
          }
        },
        f.member);
  }
  cmd->add_option("--config", config_path, "flat key = value file; flags override it");

  std::vector<const char*> argv{"ibmlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(cmd->help());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  cfg.subcommand = sub;
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void RunConfig::validate() const {
  const unsigned g = group_of(subcommand);
  if (g == 0) throw DomainError("unknown subcommand '" + subcommand + "'");
  if ((g & (kSample | kEvolve | kMeasures)) && replicas < 1) throw DomainError("replicas must be >= 1");
  if (out.empty()) throw DomainError("out must name a directory");

  if (g & kDynamicsUsers) {
    detail::drift_model(*this).validate();
  }
  if (g & (kSample | kEvolve | kIfc | kMeasures)) {
    const auto spec = detail::ensemble_spec(*this);
    spec.validate();
    if (g == kSample && scaling != "none") {
      const auto map = detail::scaling_map(*this, scaling);
      if ((map.regime == ensembles::ScalingRegime::GinibreBulk) != (spec.dim() == 2))
        throw DomainError("scaling " + scaling + " does not match the dimension of ensemble " +
                          ensembles::to_string(spec.family));
    }
  }
  if (g & kDynamicsUsers) {
    const auto model = detail::drift_model(*this);
    const auto spec = detail::ensemble_spec(*this);
    if (spec.dim() != model.dim()) {
      std::ostringstream msg;
      msg << "model " << dynamics::to_string(model.family) << " is " << (model.dim() == 2 ? "planar (d = 2)" : "1-D")
          << " but ensemble " << ensembles::to_string(spec.family) << " has d = " << spec.dim();
      throw DomainError(msg.str());
    }
    if (!(dt > 0.0)) throw DomainError("dt must be > 0");
    if (!(t >= 0.0)) throw DomainError("t must be >= 0");
    const double steps = t / dt;
    if (std::fabs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
      throw DomainError("t must be an integer multiple of dt");
    if (dt_min < 0.0 || dt_min > dt) throw DomainError("dt-min must lie in [0, dt]");
    if (output_every < 1) throw DomainError("output-every must be >= 1");
    if (!(max_jump > 0.0)) throw DomainError("max-jump must be > 0");
    if (!std::isfinite(init_scale) || init_scale == 0.0) throw DomainError("init-scale must be finite and non-zero");
    detail::initial_scaling(*this);
  }
  if (g & kIfc) {
    detail::parse_ms(ms, n);
    if (!std::isfinite(epsilon)) throw DomainError("epsilon must be finite");
  }
  if (g & kKernel) {
    auto spec = kernels::KernelSpec{kernels::kernel_family_from_string(kernel), a};
    spec.validate();
    if (points < 1) throw DomainError("points must be >= 1");
    if (!(x_max >= x_min)) throw DomainError("x-max must be >= x-min");
    if (order < 2) throw DomainError("order must be >= 2");
    if (gap_hi > gap_lo && spec.is_planar()) throw DomainError("gap determinants need a 1-D kernel");
  }
  if (g & kMeasures) {
    if (measure != "ibp" && measure != "qg-ratio") throw DomainError("measure must be ibp or qg-ratio");
    if (measure == "ibp" && replicas < 2) throw DomainError("ibp needs replicas >= 2");
  }
  if (g & kStats) {
    static const std::vector<std::string> tests = {"density", "spacing", "number-variance", "stationarity", "msd"};
    if (std::find(tests.begin(), tests.end(), test) == tests.end())
      throw DomainError("test must be one of density, spacing, number-variance, stationarity, msd");
    if (input.empty()) throw DomainError("stats needs --input");
    if (bins < 1) throw DomainError("bins must be >= 1");
    if (pairing != "auto" && pairing != "paired" && pairing != "unpaired")
      throw DomainError("pairing must be auto, paired or unpaired");
    if (!(window_fraction > 0.0 && window_fraction <= 1.0)) throw DomainError("window-fraction must lie in (0, 1]");
  }
}

}  // namespace ibmlab::cli
