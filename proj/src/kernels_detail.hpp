#pragma once

#include <cmath>
#include <cstddef>

#include "scbm/kernels.hpp"

// Per-element arithmetic shared by the serial and OpenMP kernels; keeping a
// single definition guarantees both backends produce identical bits.

namespace scbm::kernels::detail {

inline double apply1(UnaryKind op, double x) {
    switch (op) {
        case UnaryKind::Relu: return x > 0.0 ? x : 0.0;
        case UnaryKind::Sigmoid:
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            else {
                const double e = std::exp(x);
                return e / (1.0 + e);
            }
        case UnaryKind::Exp: return std::exp(x);
        case UnaryKind::Log: return std::log(x);
        case UnaryKind::Step: return x > 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

inline double apply2(BinaryKind op, double a, double b) {
    switch (op) {
        case BinaryKind::Add: return a + b;
        case BinaryKind::Sub: return a - b;
        case BinaryKind::Mul: return a * b;
        case BinaryKind::Div: return a / b;
    }
    return 0.0;
}

inline void softmax_row(const double* x, double* y, std::size_t c) {
    double mx = x[0];
    for (std::size_t j = 1; j < c; ++j)
        if (x[j] > mx) mx = x[j];
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        y[j] = std::exp(x[j] - mx);
        sum += y[j];
    }
    for (std::size_t j = 0; j < c; ++j) y[j] /= sum;
}

inline void log_softmax_row(const double* x, double* y, std::size_t c) {
    double mx = x[0];
    for (std::size_t j = 1; j < c; ++j)
        if (x[j] > mx) mx = x[j];
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(x[j] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < c; ++j) y[j] = x[j] - lse;
}

// Dot products and row accumulations always run in ascending index order.
inline void matmul_row(const double* a_row, const double* b, double* c_row,
                       std::size_t k, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
        const double av = a_row[p];
        const double* b_row = b + p * n;
        for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// sum of x[i0:i1) in index order
inline double block_sum(const double* x, std::size_t i0, std::size_t i1) {
    double s = 0.0;
    for (std::size_t i = i0; i < i1; ++i) s += x[i];
    return s;
}

constexpr std::size_t kReduceBlock = 4096;

inline void im2col_image(const double* x, std::size_t img, std::size_t h, std::size_t w,
                         std::size_t c, std::size_t kh, std::size_t kw, std::size_t stride,
                         double* cols) {
    const std::size_t oh = conv_out_dim(h, kh, stride);
    const std::size_t ow = conv_out_dim(w, kw, stride);
    const std::size_t patch = kh * kw * c;
    const double* xi = x + img * h * w * c;
    double* out = cols + img * oh * ow * patch;
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            double* dst = out + (oy * ow + ox) * patch;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const double* src = xi + ((oy * stride + ky) * w + ox * stride) * c;
                for (std::size_t i = 0; i < kw * c; ++i) dst[i] = src[i];
                dst += kw * c;
            }
        }
    }
}

inline void col2im_image(const double* cols, std::size_t img, std::size_t h, std::size_t w,
                         std::size_t c, std::size_t kh, std::size_t kw, std::size_t stride,
                         double* dx) {
    const std::size_t oh = conv_out_dim(h, kh, stride);
    const std::size_t ow = conv_out_dim(w, kw, stride);
    const std::size_t patch = kh * kw * c;
    double* dxi = dx + img * h * w * c;
    const double* in = cols + img * oh * ow * patch;
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            const double* src = in + (oy * ow + ox) * patch;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                double* dst = dxi + ((oy * stride + ky) * w + ox * stride) * c;
                for (std::size_t i = 0; i < kw * c; ++i) dst[i] += src[i];
                src += kw * c;
            }
        }
    }
}

inline void maxpool_cell(const double* x, std::size_t h, std::size_t w, std::size_t c,
                         std::size_t size, std::size_t img, std::size_t oy, std::size_t ox,
                         std::size_t ch, std::size_t ow_unused, double* y, std::size_t* argmax,
                         std::size_t out_idx) {
    (void)ow_unused;
    const double* xi = x + img * h * w * c;
    double best = -1.0 / 0.0;
    std::size_t best_idx = 0;
    for (std::size_t ky = 0; ky < size; ++ky) {
        for (std::size_t kx = 0; kx < size; ++kx) {
            const std::size_t iy = oy * size + ky;
            const std::size_t ix = ox * size + kx;
            const std::size_t idx = (iy * w + ix) * c + ch;
            if (xi[idx] > best) {
                best = xi[idx];
                best_idx = img * h * w * c + idx;
            }
        }
    }
    y[out_idx] = best;
    argmax[out_idx] = best_idx;
}

}  // namespace scbm::kernels::detail
