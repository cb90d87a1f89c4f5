#pragma once

#include <cstddef>

namespace scbm::kernels {

enum class Backend { Serial, OpenMP };

Backend backend();
void set_backend(Backend b);
int max_threads();

enum class UnaryKind { Relu, Sigmoid, Exp, Log, Step };
enum class BinaryKind { Add, Sub, Mul, Div };

// Both implementations produce bitwise-identical results: every output
// element is computed by exactly one iteration and inner accumulation
// order is fixed, so the OpenMP variant can stand in for the serial one
// anywhere. The serial namespace is the reference the tests compare against.

namespace serial {
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
double reduce_sum(const double* x, std::size_t n);
void softmax_rows(const double* x, double* y, std::size_t r, std::size_t c);
void log_softmax_rows(const double* x, double* y, std::size_t r, std::size_t c);
void vmap(UnaryKind op, const double* x, double* y, std::size_t n);
void vzip(BinaryKind op, const double* a, const double* b, double* y, std::size_t n);
void im2col(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
            std::size_t kh, std::size_t kw, std::size_t stride, double* cols);
void col2im_add(const double* cols, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                std::size_t kh, std::size_t kw, std::size_t stride, double* dx);
void maxpool2(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
              std::size_t size, double* y, std::size_t* argmax);
void maxpool2_backward(const double* dy, const std::size_t* argmax, std::size_t out_count, double* dx);
}  // namespace serial

namespace par {
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
double reduce_sum(const double* x, std::size_t n);
void softmax_rows(const double* x, double* y, std::size_t r, std::size_t c);
void log_softmax_rows(const double* x, double* y, std::size_t r, std::size_t c);
void vmap(UnaryKind op, const double* x, double* y, std::size_t n);
void vzip(BinaryKind op, const double* a, const double* b, double* y, std::size_t n);
void im2col(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
            std::size_t kh, std::size_t kw, std::size_t stride, double* cols);
void col2im_add(const double* cols, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                std::size_t kh, std::size_t kw, std::size_t stride, double* dx);
void maxpool2(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
              std::size_t size, double* y, std::size_t* argmax);
void maxpool2_backward(const double* dy, const std::size_t* argmax, std::size_t out_count, double* dx);
}  // namespace par

// Dispatching entry points: pick the parallel variant for work sizes above
// a fixed cutoff when the OpenMP backend is active.
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
double reduce_sum(const double* x, std::size_t n);
void softmax_rows(const double* x, double* y, std::size_t r, std::size_t c);
void log_softmax_rows(const double* x, double* y, std::size_t r, std::size_t c);
void vmap(UnaryKind op, const double* x, double* y, std::size_t n);
void vzip(BinaryKind op, const double* a, const double* b, double* y, std::size_t n);
void im2col(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
            std::size_t kh, std::size_t kw, std::size_t stride, double* cols);
void col2im_add(const double* cols, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                std::size_t kh, std::size_t kw, std::size_t stride, double* dx);
void maxpool2(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
              std::size_t size, double* y, std::size_t* argmax);
void maxpool2_backward(const double* dy, const std::size_t* argmax, std::size_t out_count, double* dx);

inline std::size_t conv_out_dim(std::size_t in, std::size_t kernel, std::size_t stride) {
    return (in - kernel) / stride + 1;
}

}  // namespace scbm::kernels
