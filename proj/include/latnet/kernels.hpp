#pragma once

#include <cstddef>
#include <span>

namespace latnet::kern {

// Double-precision primitives behind the library's inner loops (the
// resampling statistic is millions of dot products over node vectors).
// Every operation has a plain scalar reference implementation; on x86-64
// an AVX2+FMA variant is compiled in and picked at runtime when the CPU
// supports it. The two are equivalence-tested against each other.
struct Ops {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*dot3)(const double* a, const double* b, const double* c, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sumsq)(const double* a, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  const char* name;
};

const Ops& scalar_ops();

// nullptr when the build target or the running CPU lacks AVX2+FMA.
const Ops* avx2_ops();
bool avx2_available();

// Table used by the library. Chosen once: AVX2 when available, otherwise
// scalar. Environment variable LATNET_KERNELS=scalar|avx2 forces a choice
// (an unsatisfiable choice falls back with a warning).
const Ops& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double dot3(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  return active().dot3(a.data(), b.data(), c.data(), a.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }
inline double sumsq(std::span<const double> a) { return active().sumsq(a.data(), a.size()); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().mul(a.data(), b.data(), out.data(), a.size());
}

}  // namespace latnet::kern
