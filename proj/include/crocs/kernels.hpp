#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops used by the encoder, losses, optimizer, and
// distance computations. Every kernel has a scalar reference implementation
// and, on x86-64, an AVX2+FMA variant; the active backend is chosen once at
// startup from CPUID (override with set_backend or the CROCS_KERNELS
// environment variable, values "scalar" / "avx2"). Backends may differ in
// the last few ulps because of reassociation and FMA; each backend is
// individually deterministic.

namespace crocs::kernels {

enum class Backend { kScalar, kAvx2 };

Backend active_backend();
/// Returns false (and leaves the backend unchanged) if unsupported on this CPU.
bool set_backend(Backend backend);
std::string backend_name();

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
void scale(double* x, std::size_t n, double alpha);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double max_value(const double* x, std::size_t n);  // n >= 1
void relu(double* x, std::size_t n);
/// Zeroes grad wherever the forward pre-activation was <= 0.
void relu_backward(const double* pre, double* grad, std::size_t n);
/// One bias-corrected Adam update; bias1 = 1-beta1^t, bias2 = 1-beta2^t.
void adam_update(double* param, double* m, double* v, const double* grad,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2);

// Per-backend entry points, exposed so the test suite can check the SIMD
// variants against the scalar references directly.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, std::size_t n, double alpha);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double max_value(const double* x, std::size_t n);
void relu(double* x, std::size_t n);
void relu_backward(const double* pre, double* grad, std::size_t n);
void adam_update(double* param, double* m, double* v, const double* grad,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2);
}  // namespace scalar

bool avx2_available();

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, std::size_t n, double alpha);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double max_value(const double* x, std::size_t n);
void relu(double* x, std::size_t n);
void relu_backward(const double* pre, double* grad, std::size_t n);
void adam_update(double* param, double* m, double* v, const double* grad,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2);
}  // namespace avx2
#endif

}  // namespace crocs::kernels
