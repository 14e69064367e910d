#pragma once

#include <cstddef>
#include <span>
#include <string>

// Vector kernels backing the policy scorer and the trainers. Every kernel has
// a scalar reference implementation and, on x86-64 with AVX2, a vectorized
// variant; the backend is picked once at startup (env AGENTTHINK_KERNELS
// overrides: "scalar" or "avx2"). The variants differ only in floating-point
// association order, so scalar/AVX2 results agree to ~1e-12 relative and the
// equivalence suite pins that.

namespace driveagent::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);  // test hook
bool avx2_available();
std::string backend_name(Backend b);

/// sum_i x[i] * y[i]; x and y must have equal length.
double dot(std::span<const double> x, std::span<const double> y);

double sum(std::span<const double> x);

/// Maximum element; empty input returns -infinity.
double reduce_max(std::span<const double> x);

/// y[i] += a * x[i]
void axpy(double a, std::span<const double> x, std::span<double> y);

/// out[r] = dot(a[r*cols .. r*cols+cols), x) for r in [0, rows)
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out);

/// log(sum_i exp(x[i])), max-shifted. exp stays scalar in both backends so
/// the two differ only by reduction order.
double log_sum_exp(std::span<const double> x);

namespace scalar {
double dot(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
double reduce_max(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out);
}  // namespace scalar

namespace avx2 {
// Present only when built with AVX2 support; callers must check
// avx2_available() first.
double dot(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
double reduce_max(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out);
}  // namespace avx2

}  // namespace driveagent::kernels
