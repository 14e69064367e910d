#include "driveagent/kernels.hpp"

#ifdef DRIVEAGENT_AVX2
#include <immintrin.h>

#include <limits>

namespace driveagent::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

}  // namespace

double dot(std::span<const double> x, std::span<const double> y) {
  std::size_t n = x.size();
  std::size_t n4 = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d a = _mm256_loadu_pd(x.data() + i);
    __m256d b = _mm256_loadu_pd(y.data() + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(a, b));
  }
  double tail = 0.0;
  for (std::size_t i = n4; i < n; ++i) tail += x[i] * y[i];
  return hsum(acc) + tail;
}

double sum(std::span<const double> x) {
  std::size_t n = x.size();
  std::size_t n4 = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
  }
  double tail = 0.0;
  for (std::size_t i = n4; i < n; ++i) tail += x[i];
  return hsum(acc) + tail;
}

double reduce_max(std::span<const double> x) {
  std::size_t n = x.size();
  double m = -std::numeric_limits<double>::infinity();
  std::size_t n4 = n & ~std::size_t{3};
  if (n4 > 0) {
    __m256d acc = _mm256_loadu_pd(x.data());
    for (std::size_t i = 4; i < n4; i += 4) {
      acc = _mm256_max_pd(acc, _mm256_loadu_pd(x.data() + i));
    }
    m = hmax(acc);
  }
  for (std::size_t i = n4; i < n; ++i) {
    if (x[i] > m) m = x[i];
  }
  return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  std::size_t n = x.size();
  std::size_t n4 = n & ~std::size_t{3};
  __m256d va = _mm256_set1_pd(a);
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d xv = _mm256_loadu_pd(x.data() + i);
    __m256d yv = _mm256_loadu_pd(y.data() + i);
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(yv, _mm256_mul_pd(va, xv)));
  }
  for (std::size_t i = n4; i < n; ++i) y[i] += a * x[i];
}

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = dot(a.subspan(r * cols, cols), x);
  }
}

}  // namespace driveagent::kernels::avx2

#else  // !DRIVEAGENT_AVX2

// Built without AVX2 support: keep the symbols, forward to scalar. The
// dispatcher never selects this backend when avx2_available() is false.
namespace driveagent::kernels::avx2 {

double dot(std::span<const double> x, std::span<const double> y) { return scalar::dot(x, y); }
double sum(std::span<const double> x) { return scalar::sum(x); }
double reduce_max(std::span<const double> x) { return scalar::reduce_max(x); }
void axpy(double a, std::span<const double> x, std::span<double> y) { scalar::axpy(a, x, y); }
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out) {
  scalar::matvec(a, rows, cols, x, out);
}

}  // namespace driveagent::kernels::avx2

#endif
