// AVX2+FMA kernel lane. This translation unit is compiled with -mavx2 -mfma
// and must only be reached through the runtime dispatcher.

#include "lane/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace lane::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double* y, double alpha, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    _mm256_storeu_pd(y + i, y0);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_avx2(double* y, const double* w, const double* x,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_avx2(w + r * cols, x, cols);
  }
}

void matvec_t_acc_avx2(double* gx, const double* w, const double* gy,
                       std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_avx2(gx, gy[r], w + r * cols, cols);
  }
}

void outer_acc_avx2(double* gw, const double* gy, const double* x,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_avx2(gw + r * cols, gy[r], x, cols);
  }
}

void add_avx2(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_avx2(double* out, const double* a, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_loadu_pd(a + i)));
  }
  for (; i < n; ++i) out[i] = s * a[i];
}

void adadelta_avx2(double* x, double* eg2, double* ed2, const double* g,
                   std::size_t n, double rho, double eps, double lr) {
  const __m256d vrho = _mm256_set1_pd(rho);
  const __m256d vomr = _mm256_set1_pd(1.0 - rho);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vneg = _mm256_set1_pd(-1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    __m256d veg2 = _mm256_loadu_pd(eg2 + i);
    veg2 = _mm256_fmadd_pd(vomr, _mm256_mul_pd(vg, vg),
                           _mm256_mul_pd(vrho, veg2));
    _mm256_storeu_pd(eg2 + i, veg2);
    __m256d ved2 = _mm256_loadu_pd(ed2 + i);
    const __m256d num = _mm256_sqrt_pd(_mm256_add_pd(ved2, veps));
    const __m256d den = _mm256_sqrt_pd(_mm256_add_pd(veg2, veps));
    const __m256d d = _mm256_mul_pd(
        vneg, _mm256_mul_pd(_mm256_div_pd(num, den), vg));
    ved2 = _mm256_fmadd_pd(vomr, _mm256_mul_pd(d, d),
                           _mm256_mul_pd(vrho, ved2));
    _mm256_storeu_pd(ed2 + i, ved2);
    __m256d vx = _mm256_loadu_pd(x + i);
    vx = _mm256_fmadd_pd(vlr, d, vx);
    _mm256_storeu_pd(x + i, vx);
  }
  for (; i < n; ++i) {
    eg2[i] = rho * eg2[i] + (1.0 - rho) * g[i] * g[i];
    const double d = -std::sqrt(ed2[i] + eps) / std::sqrt(eg2[i] + eps) * g[i];
    ed2[i] = rho * ed2[i] + (1.0 - rho) * d * d;
    x[i] += lr * d;
  }
}

const Ops kAvx2Ops = {
    "avx2",          dot_avx2, axpy_avx2, matvec_avx2,
    matvec_t_acc_avx2, outer_acc_avx2, add_avx2, sub_avx2,
    mul_avx2,        scale_avx2, adadelta_avx2,
};

}  // namespace

const Ops* avx2_impl() { return &kAvx2Ops; }

}  // namespace lane::kernels

#else

namespace lane::kernels {
const Ops* avx2_impl() { return nullptr; }
}  // namespace lane::kernels

#endif
