#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibmlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or point lies outside the admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical refinement did not settle within tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double coarse, double fine)
      : Error(what), coarse_(coarse), fine_(fine) {}
  double coarse() const { return coarse_; }
  double fine() const { return fine_; }

 private:
  double coarse_;
  double fine_;
};

/// Two particles coincide; a drift would be infinite.
class CollisionError : public Error {
 public:
  using Error::Error;
};

/// Point positions in dimension 1 or 2, stored contiguously
/// as x0 [y0] x1 [y1] ...
class Configuration {
 public:
  Configuration() = default;
  Configuration(int dim, std::vector<double> coords)
      : dim_(dim), coords_(std::move(coords)) {
    if (dim_ != 1 && dim_ != 2) throw DomainError("configuration dimension must be 1 or 2");
    if (coords_.size() % static_cast<std::size_t>(dim_) != 0)
      throw DomainError("coordinate count is not a multiple of the dimension");
  }

  static Configuration line(std::vector<double> xs) { return Configuration(1, std::move(xs)); }

  int dim() const { return dim_; }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return coords_.empty(); }

  double x(std::size_t i) const { return coords_[i * dim_]; }
  double y(std::size_t i) const { return dim_ == 2 ? coords_[i * 2 + 1] : 0.0; }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<double> point(std::size_t i) { return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)}; }

  const std::vector<double>& coords() const { return coords_; }
  std::vector<double>& coords() { return coords_; }

  bool operator==(const Configuration&) const = default;

 private:
  int dim_ = 1;
  std::vector<double> coords_;
};

/// Smallest pairwise distance; +inf for fewer than two points.
double min_gap(const Configuration& c);

/// Runs body(i) for i in [0, n) on a small pool of worker threads.
/// Each index is visited exactly once; callers write to per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ibmlab
