#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace driveagent {

// Ordered JSON everywhere: emitted documents keep the canonical key order.
using Json = nlohmann::ordered_json;

/// Domain error (validation, contract violations). CLI maps it to exit 1.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / parse-input error. CLI maps it to exit 2.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Deterministic cross-platform RNG (splitmix64). std::mt19937 engines are
/// portable but the standard distributions are not; this keeps every sampled
/// artifact byte-identical regardless of the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0,n).
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  uint64_t state_;
};

/// Canonical number rendering shared by answers, tokens and reports:
/// integral values print without a decimal part, everything else as %.6g.
std::string fmt_num(double x);

/// Round half away from zero to two decimals (percent-style reporting).
inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

/// FNV-1a over bytes; used for policy hashes in run manifests.
uint64_t fnv1a(std::string_view data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::vector<std::string> list_json_files(const std::string& dir_or_file);

/// Runs fn(i) for i in [0,n) on up to `workers` threads. Results must be
/// written to preallocated slots indexed by i so output order never depends
/// on scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace driveagent
