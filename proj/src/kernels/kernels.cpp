#include "cea/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace cea::kernels {

namespace {

struct Ops {
  void (*matvec_bias)(std::size_t, std::size_t, const double*, const double*,
                      const double*, double*);
  void (*matvec_t)(std::size_t, std::size_t, const double*, const double*,
                   double*);
  void (*ger)(std::size_t, std::size_t, double, const double*, const double*,
              double*);
  double (*dot)(std::size_t, const double*, const double*);
  void (*axpy)(std::size_t, double, const double*, double*);
  void (*blend)(std::size_t, double, const double*, double*);
  double (*squared_distance)(std::size_t, const double*, const double*);
  double (*manhattan_distance)(std::size_t, const double*, const double*);
  double (*gaussian_kernel_sum)(std::size_t, std::size_t, const double*,
                                const double*, double);
  void (*adam_update)(std::size_t, double*, const double*, double*, double*,
                      double, double, double, double, double);
};

constexpr Ops kScalarOps = {
    scalar::matvec_bias,     scalar::matvec_t,
    scalar::ger,             scalar::dot,
    scalar::axpy,            scalar::blend,
    scalar::squared_distance, scalar::manhattan_distance,
    scalar::gaussian_kernel_sum, scalar::adam_update,
};

#if defined(CEA_HAVE_AVX2_TU)
constexpr Ops kAvx2Ops = {
    avx2::matvec_bias,     avx2::matvec_t,
    avx2::ger,             avx2::dot,
    avx2::axpy,            avx2::blend,
    avx2::squared_distance, avx2::manhattan_distance,
    avx2::gaussian_kernel_sum, avx2::adam_update,
};
#endif

struct State {
  const Ops* ops;
  Backend backend;
};

State pick_initial() {
#if defined(CEA_HAVE_AVX2_TU)
  const char* env = std::getenv("CEA_KERNEL_BACKEND");
  if (env != nullptr && std::strcmp(env, "scalar") == 0)
    return {&kScalarOps, Backend::Scalar};
  if (cpu_has_avx2()) return {&kAvx2Ops, Backend::Avx2};
#endif
  return {&kScalarOps, Backend::Scalar};
}

State& state() {
  static State s = pick_initial();
  return s;
}

}  // namespace

#if defined(CEA_HAVE_AVX2_TU)
bool cpu_has_avx2() { return __builtin_cpu_supports("avx2") != 0; }
#endif

Backend active_backend() { return state().backend; }

bool set_backend(Backend b) {
  if (b == Backend::Scalar) {
    state() = {&kScalarOps, Backend::Scalar};
    return true;
  }
#if defined(CEA_HAVE_AVX2_TU)
  if (b == Backend::Avx2 && cpu_has_avx2()) {
    state() = {&kAvx2Ops, Backend::Avx2};
    return true;
  }
#endif
  return false;
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

void matvec_bias(std::size_t rows, std::size_t cols, const double* w,
                 const double* b, const double* x, double* y) {
  state().ops->matvec_bias(rows, cols, w, b, x, y);
}

void matvec_t(std::size_t rows, std::size_t cols, const double* w,
              const double* x, double* y) {
  state().ops->matvec_t(rows, cols, w, x, y);
}

void ger(std::size_t rows, std::size_t cols, double alpha, const double* g,
         const double* x, double* a) {
  state().ops->ger(rows, cols, alpha, g, x, a);
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
  return state().ops->dot(x.size(), x.data(), y.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  state().ops->axpy(x.size(), alpha, x.data(), y.data());
}

void blend(double tau, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("blend: size mismatch");
  state().ops->blend(x.size(), tau, x.data(), y.data());
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("squared_distance: size mismatch");
  return state().ops->squared_distance(x.size(), x.data(), y.data());
}

double manhattan_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("manhattan_distance: size mismatch");
  return state().ops->manhattan_distance(x.size(), x.data(), y.data());
}

double gaussian_kernel_sum(std::size_t n_centers, std::size_t dim,
                           const double* centers, const double* x,
                           double inv_two_h2) {
  return state().ops->gaussian_kernel_sum(n_centers, dim, centers, x,
                                          inv_two_h2);
}

void adam_update(std::size_t n, double* p, const double* g, double* m,
                 double* v, double beta1, double beta2, double eps,
                 double lr_over_bc1, double inv_bc2) {
  state().ops->adam_update(n, p, g, m, v, beta1, beta2, eps, lr_over_bc1,
                           inv_bc2);
}

}  // namespace cea::kernels
