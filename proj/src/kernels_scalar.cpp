#include <limits>

#include "driveagent/kernels.hpp"

namespace driveagent::kernels::scalar {

double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double sum(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double reduce_max(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) {
    if (v > m) m = v;
  }
  return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = dot(a.subspan(r * cols, cols), x);
  }
}

}  // namespace driveagent::kernels::scalar
