#include "crocs/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace crocs::kernels {

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double*, std::size_t, double);
    double (*sum)(const double*, std::size_t);
    double (*sumsq)(const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    double (*max_value)(const double*, std::size_t);
    void (*relu)(double*, std::size_t);
    void (*relu_backward)(const double*, double*, std::size_t);
    void (*adam_update)(double*, double*, double*, const double*, std::size_t,
                        double, double, double, double, double, double);
};

constexpr Table kScalarTable = {
    scalar::dot,    scalar::axpy,   scalar::scale,         scalar::sum,
    scalar::sumsq,  scalar::sqdist, scalar::max_value,     scalar::relu,
    scalar::relu_backward, scalar::adam_update,
};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2Table = {
    avx2::dot,    avx2::axpy,   avx2::scale,         avx2::sum,
    avx2::sumsq,  avx2::sqdist, avx2::max_value,     avx2::relu,
    avx2::relu_backward, avx2::adam_update,
};
#endif

struct State {
    Backend backend;
    const Table* table;
};

State select_initial() {
    const char* env = std::getenv("CROCS_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) {
        return {Backend::kScalar, &kScalarTable};
    }
#if defined(__x86_64__) || defined(_M_X64)
    const bool want_avx2 = env == nullptr || std::strcmp(env, "avx2") == 0 ||
                           std::strcmp(env, "auto") == 0;
    if (want_avx2 && avx2_available()) {
        return {Backend::kAvx2, &kAvx2Table};
    }
#endif
    return {Backend::kScalar, &kScalarTable};
}

State& state() {
    static State s = select_initial();
    return s;
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return state().backend; }

bool set_backend(Backend backend) {
    if (backend == Backend::kScalar) {
        state() = {Backend::kScalar, &kScalarTable};
        return true;
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (backend == Backend::kAvx2 && avx2_available()) {
        state() = {Backend::kAvx2, &kAvx2Table};
        return true;
    }
#endif
    return false;
}

std::string backend_name() {
    return state().backend == Backend::kAvx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) { return state().table->dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { state().table->axpy(alpha, x, y, n); }
void scale(double* x, std::size_t n, double alpha) { state().table->scale(x, n, alpha); }
double sum(const double* x, std::size_t n) { return state().table->sum(x, n); }
double sumsq(const double* x, std::size_t n) { return state().table->sumsq(x, n); }
double sqdist(const double* a, const double* b, std::size_t n) { return state().table->sqdist(a, b, n); }
double max_value(const double* x, std::size_t n) { return state().table->max_value(x, n); }
void relu(double* x, std::size_t n) { state().table->relu(x, n); }
void relu_backward(const double* pre, double* grad, std::size_t n) { state().table->relu_backward(pre, grad, n); }
void adam_update(double* param, double* m, double* v, const double* grad,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2) {
    state().table->adam_update(param, m, v, grad, n, lr, beta1, beta2, eps, bias1, bias2);
}

}  // namespace crocs::kernels
