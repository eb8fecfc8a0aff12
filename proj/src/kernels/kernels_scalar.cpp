#include "lane/kernels.hpp"

#include <cmath>

namespace lane::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double* y, double alpha, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(double* y, const double* w, const double* x,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_scalar(w + r * cols, x, cols);
  }
}

void matvec_t_acc_scalar(double* gx, const double* w, const double* gy,
                         std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_scalar(gx, gy[r], w + r * cols, cols);
  }
}

void outer_acc_scalar(double* gw, const double* gy, const double* x,
                      std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_scalar(gw + r * cols, gy[r], x, cols);
  }
}

void add_scalar(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_scalar(double* out, const double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = s * a[i];
}

void adadelta_scalar(double* x, double* eg2, double* ed2, const double* g,
                     std::size_t n, double rho, double eps, double lr) {
  for (std::size_t i = 0; i < n; ++i) {
    eg2[i] = rho * eg2[i] + (1.0 - rho) * g[i] * g[i];
    const double d = -std::sqrt(ed2[i] + eps) / std::sqrt(eg2[i] + eps) * g[i];
    ed2[i] = rho * ed2[i] + (1.0 - rho) * d * d;
    x[i] += lr * d;
  }
}

const Ops kScalarOps = {
    "scalar",        dot_scalar, axpy_scalar, matvec_scalar,
    matvec_t_acc_scalar, outer_acc_scalar, add_scalar, sub_scalar,
    mul_scalar,      scale_scalar, adadelta_scalar,
};

}  // namespace

const Ops& scalar() { return kScalarOps; }

}  // namespace lane::kernels
