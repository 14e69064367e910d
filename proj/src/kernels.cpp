#include "driveagent/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>

namespace driveagent::kernels {

namespace {

bool detect_avx2() {
#if defined(DRIVEAGENT_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("AGENTTHINK_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && detect_avx2()) return Backend::avx2;
  }
  return detect_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend& backend_slot() {
  static Backend b = initial_backend();
  return b;
}

}  // namespace

bool avx2_available() {
  static bool v = detect_avx2();
  return v;
}

Backend active_backend() { return backend_slot(); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_available()) b = Backend::scalar;
  backend_slot() = b;
}

std::string backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

double dot(std::span<const double> x, std::span<const double> y) {
  return active_backend() == Backend::avx2 ? avx2::dot(x, y) : scalar::dot(x, y);
}

double sum(std::span<const double> x) {
  return active_backend() == Backend::avx2 ? avx2::sum(x) : scalar::sum(x);
}

double reduce_max(std::span<const double> x) {
  return active_backend() == Backend::avx2 ? avx2::reduce_max(x) : scalar::reduce_max(x);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  active_backend() == Backend::avx2 ? avx2::axpy(a, x, y) : scalar::axpy(a, x, y);
}

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out) {
  active_backend() == Backend::avx2 ? avx2::matvec(a, rows, cols, x, out)
                                    : scalar::matvec(a, rows, cols, x, out);
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double m = reduce_max(x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace driveagent::kernels
