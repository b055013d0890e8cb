#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ibmlab/common.hpp"

namespace ibmlab::cli {

inline constexpr const char* kVersion = "0.3.0";

/// Everything a run needs. Keys of `to_key_values` are the flag names, so
/// a config file line `n = 64` is the same as `--n 64`.
struct RunConfig {
  std::string subcommand;

  // ensemble
  std::string ensemble = "auto";  // auto: picked from the model for evolve
  int n = 8;
  double beta = 2.0;
  double a = 1.0;
  std::string scaling = "none";

  // dynamics
  std::string model = "dyson";
  double r = std::numeric_limits<double>::infinity();
  double confinement = 0.0;
  std::string init_scaling = "auto";
  double init_scale = 1.0;
  double t = 0.1;
  double dt = 1e-3;
  double dt_min = 0.0;  // 0: dt * 2^-20
  int output_every = 1;
  double max_jump = 0.5;
  bool record_noise = false;

  std::uint64_t seed = 0;
  std::uint64_t replicas = 1;
  std::string out = "out";

  // ifc-check
  std::string input;
  std::string ms = "1";
  double epsilon = 1e-3;
  std::uint64_t replica = 0;
  double tolerance = 1e-12;

  // kernel
  std::string kernel = "sine";
  double s_time = 0.0;
  double t_time = 0.0;
  double x_min = -3.0;
  double x_max = 3.0;
  int points = 21;
  double gap_lo = 0.0;
  double gap_hi = 0.0;
  int order = 20;
  double tol = 1e-6;

  // measures
  std::string measure = "ibp";
  double center = 0.5;
  double width = 0.7;
  double window = 1.0;
  std::uint64_t m = 2;
  int grid_order = 16;

  // stats
  std::string test = "density";
  std::string equilibrium = "initial";
  std::string radii = "2,3,4,5,6,8,10,12,14";
  int bins = 40;
  double window_fraction = 0.5;
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t permutations = 999;
  std::string pairing = "auto";
  std::uint64_t min_replicas = 50;
  int lag_points = 16;

  /// Every key with its value in canonical text form, in a fixed order.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  /// Constraint checks across fields; throws DomainError naming the constraint.
  void validate() const;
};

/// Parses `ibmlab <subcommand> [--key value ...] [--config file]`. Values
/// from the config file apply only where no flag was given; unknown keys
/// are rejected. Throws ConfigError; `--help` throws HelpRequested.
RunConfig parse_config(const std::vector<std::string>& args);

class ConfigError : public Error {
 public:
  using Error::Error;
};

class HelpRequested : public Error {
 public:
  using Error::Error;
};

/// Reads a flat key = value file ('#' comments, optional quotes).
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct Verdict {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct RunManifest {
  RunConfig config;
  std::string config_hash;
  std::string version = kVersion;
  double wall_time = 0.0;
  bool complete = false;
  std::string error;
  /// Flat diagnostics in insertion order (rejections, min gap, stderr, ...).
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<Verdict> verdicts;
  std::vector<OutputFile> outputs;

  std::string to_json() const;
};

/// Executes the subcommand, writes its outputs and manifest.json into
/// config.out. On failure the manifest is written with complete = false
/// and the error is rethrown.
RunManifest run(const RunConfig& config);

/// Hex SHA-256 of a file's bytes / of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& data);

/// 17 significant digits, so the text reads back to the same double.
std::string format_double(double v);

/// Minimal CSV table: header plus numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Runs the parsed command line; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace ibmlab::cli
