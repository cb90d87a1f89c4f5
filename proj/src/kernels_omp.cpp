#include <cstdint>
#include <vector>

#include "kernels_detail.hpp"
#include "scbm/kernels.hpp"

namespace scbm::kernels::par {

using namespace detail;
using idx_t = std::ptrdiff_t;

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(m); ++i)
        matmul_row(a + i * static_cast<idx_t>(k), b, c + i * static_cast<idx_t>(n), k, n);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(m); ++i)
        for (std::size_t j = 0; j < n; ++j)
            c[i * static_cast<idx_t>(n) + static_cast<idx_t>(j)] = dot(a + i * static_cast<idx_t>(k), b + j * k, k);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> at(m * k);
#pragma omp parallel for schedule(static)
    for (idx_t p = 0; p < static_cast<idx_t>(k); ++p)
        for (std::size_t i = 0; i < m; ++i) at[i * k + static_cast<std::size_t>(p)] = a[static_cast<std::size_t>(p) * m + i];
    matmul(at.data(), b, c, m, k, n);
}

double reduce_sum(const double* x, std::size_t n) {
    // fixed-size blocks summed in block order: the result does not depend on
    // the thread count, so it matches the serial reference bit for bit
    const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> partial(nblocks);
#pragma omp parallel for schedule(static)
    for (idx_t bl = 0; bl < static_cast<idx_t>(nblocks); ++bl) {
        const std::size_t i0 = static_cast<std::size_t>(bl) * kReduceBlock;
        const std::size_t i1 = i0 + kReduceBlock < n ? i0 + kReduceBlock : n;
        partial[static_cast<std::size_t>(bl)] = block_sum(x, i0, i1);
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

void softmax_rows(const double* x, double* y, std::size_t r, std::size_t c) {
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(r); ++i)
        softmax_row(x + i * static_cast<idx_t>(c), y + i * static_cast<idx_t>(c), c);
}

void log_softmax_rows(const double* x, double* y, std::size_t r, std::size_t c) {
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(r); ++i)
        log_softmax_row(x + i * static_cast<idx_t>(c), y + i * static_cast<idx_t>(c), c);
}

void vmap(UnaryKind op, const double* x, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(n); ++i) y[i] = apply1(op, x[i]);
}

void vzip(BinaryKind op, const double* a, const double* b, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(n); ++i) y[i] = apply2(op, a[i], b[i]);
}

void im2col(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
            std::size_t kh, std::size_t kw, std::size_t stride, double* cols) {
#pragma omp parallel for schedule(static)
    for (idx_t img = 0; img < static_cast<idx_t>(n); ++img)
        im2col_image(x, static_cast<std::size_t>(img), h, w, c, kh, kw, stride, cols);
}

void col2im_add(const double* cols, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                std::size_t kh, std::size_t kw, std::size_t stride, double* dx) {
    // parallel over images: all writes for one image stay on one thread
#pragma omp parallel for schedule(static)
    for (idx_t img = 0; img < static_cast<idx_t>(n); ++img)
        col2im_image(cols, static_cast<std::size_t>(img), h, w, c, kh, kw, stride, dx);
}

void maxpool2(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
              std::size_t size, double* y, std::size_t* argmax) {
    const std::size_t oh = h / size, ow = w / size;
    const std::size_t per_img = oh * ow * c;
#pragma omp parallel for schedule(static)
    for (idx_t img = 0; img < static_cast<idx_t>(n); ++img)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t out_idx = static_cast<std::size_t>(img) * per_img + (oy * ow + ox) * c + ch;
                    maxpool_cell(x, h, w, c, size, static_cast<std::size_t>(img), oy, ox, ch, ow, y, argmax, out_idx);
                }
}

void maxpool2_backward(const double* dy, const std::size_t* argmax, std::size_t out_count, double* dx) {
    // disjoint windows: distinct outputs never share an input cell
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(out_count); ++i) dx[argmax[i]] += dy[i];
}

}  // namespace scbm::kernels::par
