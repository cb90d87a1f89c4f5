#include "scbm/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scbm::kernels {

namespace {
Backend g_backend = Backend::OpenMP;
// below this many flops/elements the omp fork overhead dominates
constexpr std::size_t kCutoff = 16384;
}  // namespace

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

static inline bool par_ok(std::size_t work) {
    return g_backend == Backend::OpenMP && work >= kCutoff && max_threads() > 1;
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    if (par_ok(m * k * n)) par::matmul(a, b, c, m, k, n);
    else serial::matmul(a, b, c, m, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    if (par_ok(m * k * n)) par::matmul_nt(a, b, c, m, k, n);
    else serial::matmul_nt(a, b, c, m, k, n);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    if (par_ok(m * k * n)) par::matmul_tn(a, b, c, m, k, n);
    else serial::matmul_tn(a, b, c, m, k, n);
}

double reduce_sum(const double* x, std::size_t n) {
    return par_ok(n) ? par::reduce_sum(x, n) : serial::reduce_sum(x, n);
}

void softmax_rows(const double* x, double* y, std::size_t r, std::size_t c) {
    if (par_ok(r * c)) par::softmax_rows(x, y, r, c);
    else serial::softmax_rows(x, y, r, c);
}

void log_softmax_rows(const double* x, double* y, std::size_t r, std::size_t c) {
    if (par_ok(r * c)) par::log_softmax_rows(x, y, r, c);
    else serial::log_softmax_rows(x, y, r, c);
}

void vmap(UnaryKind op, const double* x, double* y, std::size_t n) {
    if (par_ok(n)) par::vmap(op, x, y, n);
    else serial::vmap(op, x, y, n);
}

void vzip(BinaryKind op, const double* a, const double* b, double* y, std::size_t n) {
    if (par_ok(n)) par::vzip(op, a, b, y, n);
    else serial::vzip(op, a, b, y, n);
}

void im2col(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
            std::size_t kh, std::size_t kw, std::size_t stride, double* cols) {
    if (par_ok(n * h * w * c)) par::im2col(x, n, h, w, c, kh, kw, stride, cols);
    else serial::im2col(x, n, h, w, c, kh, kw, stride, cols);
}

void col2im_add(const double* cols, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                std::size_t kh, std::size_t kw, std::size_t stride, double* dx) {
    if (par_ok(n * h * w * c)) par::col2im_add(cols, n, h, w, c, kh, kw, stride, dx);
    else serial::col2im_add(cols, n, h, w, c, kh, kw, stride, dx);
}

void maxpool2(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
              std::size_t size, double* y, std::size_t* argmax) {
    if (par_ok(n * h * w * c)) par::maxpool2(x, n, h, w, c, size, y, argmax);
    else serial::maxpool2(x, n, h, w, c, size, y, argmax);
}

void maxpool2_backward(const double* dy, const std::size_t* argmax, std::size_t out_count, double* dx) {
    if (par_ok(out_count)) par::maxpool2_backward(dy, argmax, out_count, dx);
    else serial::maxpool2_backward(dy, argmax, out_count, dx);
}

}  // namespace scbm::kernels
