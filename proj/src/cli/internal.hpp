#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ibmlab/cli.hpp"
#include "ibmlab/dynamics.hpp"
#include "ibmlab/ensembles.hpp"

namespace ibmlab::cli::detail {

ensembles::EnsembleSpec ensemble_spec(const RunConfig& c);
dynamics::DriftModel drift_model(const RunConfig& c);
ensembles::ScalingMap scaling_map(const RunConfig& c, const std::string& regime);
/// Scaling applied to initial samples before evolve; none for Dyson and Ginibre.
std::optional<ensembles::ScalingMap> initial_scaling(const RunConfig& c);
Configuration initial_configuration(const RunConfig& c, std::uint64_t replica);
dynamics::EvolveOptions evolve_options(const RunConfig& c);

std::vector<std::size_t> parse_ms(const std::string& text, int n);
std::vector<double> parse_list(const std::string& text);

/// Buffered CSV writer; numbers use format_double.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);
  void close();

 private:
  std::FILE* f_ = nullptr;
  std::filesystem::path path_;
};

}  // namespace ibmlab::cli::detail
