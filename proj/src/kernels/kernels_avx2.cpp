#include "cea/kernels.hpp"

#if defined(CEA_HAVE_AVX2_TU)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace cea::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

void matvec_bias(std::size_t rows, std::size_t cols, const double* w,
                 const double* b, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c),
                            acc);
    }
    double sum = hsum(acc);
    for (; c < cols; ++c) sum += row[c] * x[c];
    y[r] = sum + b[r];
  }
}

void matvec_t(std::size_t rows, std::size_t cols, const double* w,
              const double* x, double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const __m256d xr = _mm256_set1_pd(x[r]);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d acc = _mm256_loadu_pd(y + c);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), xr, acc);
      _mm256_storeu_pd(y + c, acc);
    }
    for (; c < cols; ++c) y[c] += row[c] * x[r];
  }
}

void ger(std::size_t rows, std::size_t cols, double alpha, const double* g,
         const double* x, double* a) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = a + r * cols;
    const double gr = alpha * g[r];
    const __m256d vg = _mm256_set1_pd(gr);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d acc = _mm256_loadu_pd(row + c);
      acc = _mm256_fmadd_pd(vg, _mm256_loadu_pd(x + c), acc);
      _mm256_storeu_pd(row + c, acc);
    }
    for (; c < cols; ++c) row[c] += gr * x[c];
  }
}

double dot(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_loadu_pd(y + i);
    acc = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), acc);
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void blend(std::size_t n, double tau, const double* x, double* y) {
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d vk = _mm256_set1_pd(1.0 - tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xs = _mm256_mul_pd(vt, _mm256_loadu_pd(x + i));
    const __m256d acc = _mm256_fmadd_pd(vk, _mm256_loadu_pd(y + i), xs);
    _mm256_storeu_pd(y + i, acc);
  }
  const double keep = 1.0 - tau;
  for (; i < n; ++i) y[i] = tau * x[i] + keep * y[i];
}

double squared_distance(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum;
}

double manhattan_distance(std::size_t n, const double* x, const double* y) {
  // clear the sign bit for fabs
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, _mm256_and_pd(d, mask));
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += std::fabs(x[i] - y[i]);
  return sum;
}

double gaussian_kernel_sum(std::size_t n_centers, std::size_t dim,
                           const double* centers, const double* x,
                           double inv_two_h2) {
  double acc = 0.0;
  if (dim == 1) {
    // vectorize the distance part over centers; exp stays scalar
    const __m256d vx = _mm256_set1_pd(x[0]);
    const __m256d vs = _mm256_set1_pd(-inv_two_h2);
    std::size_t i = 0;
    alignas(32) double e[4];
    for (; i + 4 <= n_centers; i += 4) {
      const __m256d d = _mm256_sub_pd(vx, _mm256_loadu_pd(centers + i));
      const __m256d sq = _mm256_mul_pd(_mm256_mul_pd(d, d), vs);
      _mm256_store_pd(e, sq);
      acc += std::exp(e[0]) + std::exp(e[1]) + std::exp(e[2]) + std::exp(e[3]);
    }
    for (; i < n_centers; ++i) {
      const double d = x[0] - centers[i];
      acc += std::exp(-d * d * inv_two_h2);
    }
    return acc;
  }
  for (std::size_t i = 0; i < n_centers; ++i) {
    const double sq = squared_distance(dim, x, centers + i * dim);
    acc += std::exp(-sq * inv_two_h2);
  }
  return acc;
}

void adam_update(std::size_t n, double* p, const double* g, double* m,
                 double* v, double beta1, double beta2, double eps,
                 double lr_over_bc1, double inv_bc2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vlr = _mm256_set1_pd(lr_over_bc1);
  const __m256d vbc2 = _mm256_set1_pd(inv_bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    __m256d vm = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    vm = _mm256_fmadd_pd(vb1, vm, _mm256_mul_pd(vomb1, vg));
    vv = _mm256_fmadd_pd(vb2, vv, _mm256_mul_pd(vomb2, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d denom =
        _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vbc2)), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, vm), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  if (i < n) {
    scalar::adam_update(n - i, p + i, g + i, m + i, v + i, beta1, beta2, eps,
                        lr_over_bc1, inv_bc2);
  }
}

}  // namespace cea::kernels::avx2

#endif  // CEA_HAVE_AVX2_TU
