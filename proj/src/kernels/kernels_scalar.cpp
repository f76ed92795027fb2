#include <cmath>
#include <cstddef>

#include "cea/kernels.hpp"

namespace cea::kernels::scalar {

void matvec_bias(std::size_t rows, std::size_t cols, const double* w,
                 const double* b, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc + b[r];
  }
}

void matvec_t(std::size_t rows, std::size_t cols, const double* w,
              const double* x, double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const double xr = x[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

void ger(std::size_t rows, std::size_t cols, double alpha, const double* g,
         const double* x, double* a) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = a + r * cols;
    const double gr = alpha * g[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

double dot(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void blend(std::size_t n, double tau, const double* x, double* y) {
  const double keep = 1.0 - tau;
  for (std::size_t i = 0; i < n; ++i) y[i] = tau * x[i] + keep * y[i];
}

double squared_distance(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

double manhattan_distance(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(x[i] - y[i]);
  return acc;
}

double gaussian_kernel_sum(std::size_t n_centers, std::size_t dim,
                           const double* centers, const double* x,
                           double inv_two_h2) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n_centers; ++i) {
    const double* c = centers + i * dim;
    double sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = x[k] - c[k];
      sq += d * d;
    }
    acc += std::exp(-sq * inv_two_h2);
  }
  return acc;
}

void adam_update(std::size_t n, double* p, const double* g, double* m,
                 double* v, double beta1, double beta2, double eps,
                 double lr_over_bc1, double inv_bc2) {
  const double one_m_b1 = 1.0 - beta1;
  const double one_m_b2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + one_m_b1 * g[i];
    v[i] = beta2 * v[i] + one_m_b2 * g[i] * g[i];
    p[i] -= lr_over_bc1 * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
  }
}

}  // namespace cea::kernels::scalar
