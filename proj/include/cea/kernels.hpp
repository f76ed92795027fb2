#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Double-precision arithmetic kernels used by the network, sampler and
// matching code. Every kernel has a scalar reference implementation and,
// on x86-64, an AVX2/FMA variant. The backend is picked once at startup
// from CPU capabilities and can be overridden (CEA_KERNEL_BACKEND=scalar
// or set_backend) for equivalence testing.
namespace cea::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
// Returns false when the requested backend is not available on this CPU.
bool set_backend(Backend b);
std::string_view backend_name(Backend b);

// y = W x + b, W row-major (rows x cols), |x| = cols, |y| = |b| = rows.
void matvec_bias(std::size_t rows, std::size_t cols, const double* w,
                 const double* b, const double* x, double* y);

// y = W^T x, |x| = rows, |y| = cols. y is overwritten.
void matvec_t(std::size_t rows, std::size_t cols, const double* w,
              const double* x, double* y);

// A += alpha * g x^T, A row-major (rows x cols), |g| = rows, |x| = cols.
void ger(std::size_t rows, std::size_t cols, double alpha, const double* g,
         const double* x, double* a);

double dot(std::span<const double> x, std::span<const double> y);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// y = tau * x + (1 - tau) * y
void blend(double tau, std::span<const double> x, std::span<double> y);

double squared_distance(std::span<const double> x, std::span<const double> y);
double manhattan_distance(std::span<const double> x, std::span<const double> y);

// sum_i exp(-|x - c_i|^2 * inv_two_h2); centers row-major (n_centers x dim).
double gaussian_kernel_sum(std::size_t n_centers, std::size_t dim,
                           const double* centers, const double* x,
                           double inv_two_h2);

// Fused Adam element update:
//   m = beta1*m + (1-beta1)*g
//   v = beta2*v + (1-beta2)*g^2
//   p -= lr_over_bc1 * m / (sqrt(v * inv_bc2) + eps)
// where bc1 = 1-beta1^t, inv_bc2 = 1/(1-beta2^t) are bias corrections.
void adam_update(std::size_t n, double* p, const double* g, double* m,
                 double* v, double beta1, double beta2, double eps,
                 double lr_over_bc1, double inv_bc2);

// Reference implementations, always available; used directly by the
// equivalence tests.
namespace scalar {
void matvec_bias(std::size_t rows, std::size_t cols, const double* w,
                 const double* b, const double* x, double* y);
void matvec_t(std::size_t rows, std::size_t cols, const double* w,
              const double* x, double* y);
void ger(std::size_t rows, std::size_t cols, double alpha, const double* g,
         const double* x, double* a);
double dot(std::size_t n, const double* x, const double* y);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void blend(std::size_t n, double tau, const double* x, double* y);
double squared_distance(std::size_t n, const double* x, const double* y);
double manhattan_distance(std::size_t n, const double* x, const double* y);
double gaussian_kernel_sum(std::size_t n_centers, std::size_t dim,
                           const double* centers, const double* x,
                           double inv_two_h2);
void adam_update(std::size_t n, double* p, const double* g, double* m,
                 double* v, double beta1, double beta2, double eps,
                 double lr_over_bc1, double inv_bc2);
}  // namespace scalar

#if defined(CEA_HAVE_AVX2_TU)
namespace avx2 {
void matvec_bias(std::size_t rows, std::size_t cols, const double* w,
                 const double* b, const double* x, double* y);
void matvec_t(std::size_t rows, std::size_t cols, const double* w,
              const double* x, double* y);
void ger(std::size_t rows, std::size_t cols, double alpha, const double* g,
         const double* x, double* a);
double dot(std::size_t n, const double* x, const double* y);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void blend(std::size_t n, double tau, const double* x, double* y);
double squared_distance(std::size_t n, const double* x, const double* y);
double manhattan_distance(std::size_t n, const double* x, const double* y);
double gaussian_kernel_sum(std::size_t n_centers, std::size_t dim,
                           const double* centers, const double* x,
                           double inv_two_h2);
void adam_update(std::size_t n, double* p, const double* g, double* m,
                 double* v, double beta1, double beta2, double eps,
                 double lr_over_bc1, double inv_bc2);
}  // namespace avx2

bool cpu_has_avx2();
#endif

}  // namespace cea::kernels
