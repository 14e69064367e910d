#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "driveagent/kernels.hpp"
#include "driveagent/util.hpp"

using namespace driveagent;
namespace k = driveagent::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match naive formulas") {
  std::vector<double> x = {1.0, -2.0, 3.0};
  std::vector<double> y = {0.5, 4.0, -1.0};
  CHECK(k::scalar::dot(x, y) == doctest::Approx(1.0 * 0.5 - 2.0 * 4.0 - 3.0));
  CHECK(k::scalar::sum(x) == doctest::Approx(2.0));
  CHECK(k::scalar::reduce_max(x) == 3.0);
  std::vector<double> acc = {1.0, 1.0, 1.0};
  k::scalar::axpy(2.0, x, acc);
  CHECK(acc[0] == doctest::Approx(3.0));
  CHECK(acc[1] == doctest::Approx(-3.0));
  CHECK(acc[2] == doctest::Approx(7.0));
}

TEST_CASE("avx2 variants agree with scalar reference on random sizes") {
  if (!k::avx2_available()) return;  // scalar-only host
  Rng rng(42);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 63u, 100u, 257u}) {
    auto x = random_vec(rng, n);
    auto y = random_vec(rng, n);
    CHECK(std::abs(k::avx2::dot(x, y) - k::scalar::dot(x, y)) <= 1e-12 * (1.0 + n));
    CHECK(std::abs(k::avx2::sum(x) - k::scalar::sum(x)) <= 1e-12 * (1.0 + n));
    CHECK(k::avx2::reduce_max(x) == k::scalar::reduce_max(x));

    auto acc_a = random_vec(rng, n);
    auto acc_b = acc_a;
    k::avx2::axpy(1.7, x, acc_a);
    k::scalar::axpy(1.7, x, acc_b);
    for (std::size_t i = 0; i < n; ++i) CHECK(acc_a[i] == doctest::Approx(acc_b[i]).epsilon(1e-12));
  }
}

TEST_CASE("matvec equals row-wise dot on both backends") {
  Rng rng(7);
  std::size_t rows = 13, cols = 11;
  auto a = random_vec(rng, rows * cols);
  auto x = random_vec(rng, cols);
  std::vector<double> out_scalar(rows), out_avx(rows);
  k::scalar::matvec(a, rows, cols, x, out_scalar);
  for (std::size_t r = 0; r < rows; ++r) {
    double want = 0.0;
    for (std::size_t c = 0; c < cols; ++c) want += a[r * cols + c] * x[c];
    CHECK(out_scalar[r] == doctest::Approx(want));
  }
  if (k::avx2_available()) {
    k::avx2::matvec(a, rows, cols, x, out_avx);
    for (std::size_t r = 0; r < rows; ++r) {
      CHECK(out_avx[r] == doctest::Approx(out_scalar[r]).epsilon(1e-12));
    }
  }
}

TEST_CASE("log_sum_exp is shift-stable and matches direct evaluation") {
  std::vector<double> v = {0.1, -2.0, 1.5};
  double direct = std::log(std::exp(0.1) + std::exp(-2.0) + std::exp(1.5));
  CHECK(k::log_sum_exp(v) == doctest::Approx(direct).epsilon(1e-12));

  std::vector<double> shifted = {1000.1, 998.0, 1001.5};
  CHECK(k::log_sum_exp(shifted) == doctest::Approx(direct + 1000.0).epsilon(1e-12));

  std::vector<double> empty;
  CHECK(k::log_sum_exp(empty) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("backend dispatch is switchable and consistent") {
  Rng rng(9);
  auto x = random_vec(rng, 37);
  auto y = random_vec(rng, 37);

  k::Backend original = k::active_backend();
  k::set_backend(k::Backend::scalar);
  double d_scalar = k::dot(x, y);
  k::set_backend(k::Backend::avx2);  // falls back to scalar when unavailable
  double d_active = k::dot(x, y);
  k::set_backend(original);

  CHECK(std::abs(d_scalar - d_active) <= 1e-11);
}
