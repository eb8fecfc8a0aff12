#pragma once

#include <cstddef>

// Dense double-precision kernels behind the autodiff engine. Two lanes are
// provided: a scalar reference implementation and an AVX2+FMA variant. The
// active lane is chosen once at runtime (cpuid, overridable via the
// LANE_KERNELS environment variable or set_active()). Vector lengths here are
// small (the model dimension and its multiples), so every kernel handles
// arbitrary n with a scalar tail.
namespace lane::kernels {

struct Ops {
  const char* name;

  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
  // y = W x, W row-major (rows x cols), x has cols entries
  void (*matvec)(double* y, const double* w, const double* x,
                 std::size_t rows, std::size_t cols);
  // gx[j] += sum_r W[r][j] * gy[r]
  void (*matvec_t_acc)(double* gx, const double* w, const double* gy,
                       std::size_t rows, std::size_t cols);
  // GW[r][j] += gy[r] * x[j]
  void (*outer_acc)(double* gw, const double* gy, const double* x,
                    std::size_t rows, std::size_t cols);
  // out[i] = a[i] + b[i]
  void (*add)(double* out, const double* a, const double* b, std::size_t n);
  // out[i] = a[i] - b[i]
  void (*sub)(double* out, const double* a, const double* b, std::size_t n);
  // out[i] = a[i] * b[i]
  void (*mul)(double* out, const double* a, const double* b, std::size_t n);
  // out[i] = s * a[i]
  void (*scale)(double* out, const double* a, double s, std::size_t n);
  // AdaDelta update: accumulators eg2/ed2, gradient g, parameters x.
  //   eg2 <- rho*eg2 + (1-rho)*g^2
  //   d    = -sqrt(ed2+eps)/sqrt(eg2+eps) * g
  //   ed2 <- rho*ed2 + (1-rho)*d^2
  //   x   <- x + lr*d
  void (*adadelta)(double* x, double* eg2, double* ed2, const double* g,
                   std::size_t n, double rho, double eps, double lr);
};

// Scalar reference lane, always available.
const Ops& scalar();

// AVX2+FMA lane; nullptr if not compiled in or the CPU lacks support.
const Ops* avx2();

// Active lane. First call resolves LANE_KERNELS (scalar|avx2|auto; default
// auto = best available) and caches the choice.
const Ops& active();

// Force a lane by name ("scalar", "avx2", "auto"). Throws std::runtime_error
// if the requested lane is unavailable.
void set_active(const char* name);

}  // namespace lane::kernels
