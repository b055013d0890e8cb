#include "ibmlab/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ibmlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open0(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }
inline double to_closed0(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::array<double, 2> box_muller(double u1, double u2) {
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<double, 2> CounterStream::normal_pair(std::uint64_t c0, std::uint32_t c1, std::uint32_t c2) const {
  const auto b = block(c0, c1, c2);
  const std::uint64_t w0 = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  const std::uint64_t w1 = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
  return box_muller(to_open0(w0), to_closed0(w1));
}

PhiloxEngine::result_type PhiloxEngine::operator()() {
  if (buffered_ == 0) {
    buffer_ = stream_.block(counter_++, 0, 0);
    buffered_ = 2;
  }
  const int idx = 2 - buffered_;
  --buffered_;
  return (static_cast<std::uint64_t>(buffer_[2 * idx]) << 32) | buffer_[2 * idx + 1];
}

double PhiloxEngine::uniform_open0() { return to_open0((*this)()); }

double PhiloxEngine::uniform() { return to_closed0((*this)()); }

double PhiloxEngine::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open0();
  const double u2 = uniform();
  const auto z = box_muller(u1, u2);
  cached_normal_ = z[1];
  has_cached_ = true;
  return z[0];
}

double PhiloxEngine::chi(double k) {
  if (k <= 0.0) return 0.0;
  std::gamma_distribution<double> gamma(0.5 * k, 2.0);
  return std::sqrt(gamma(*this));
}

}  // namespace ibmlab
