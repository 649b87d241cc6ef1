#include "latnet/kernels.hpp"

namespace latnet::kern {
namespace {

// Reference implementations: one accumulator, no reassociation tricks.

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double dot3_scalar(const double* a, const double* b, const double* c, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i] * c[i];
  return acc;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sumsq_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{dot_scalar, dot3_scalar, sum_scalar, sumsq_scalar,
                       axpy_scalar, mul_scalar, "scalar"};
  return ops;
}

}  // namespace latnet::kern
