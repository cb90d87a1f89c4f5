#include <vector>

#include "kernels_detail.hpp"
#include "scbm/kernels.hpp"

namespace scbm::kernels::serial {

using namespace detail;

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) matmul_row(a + i * k, b, c + i * n, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    // c[i,j] = dot(a_row_i, b_row_j), b is (n, k)
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    // a is (k, m); transpose then multiply so the inner loops stay contiguous
    std::vector<double> at(m * k);
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t i = 0; i < m; ++i) at[i * k + p] = a[p * m + i];
    matmul(at.data(), b, c, m, k, n);
}

double reduce_sum(const double* x, std::size_t n) {
    const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
    double total = 0.0;
    for (std::size_t bl = 0; bl < nblocks; ++bl) {
        const std::size_t i0 = bl * kReduceBlock;
        const std::size_t i1 = i0 + kReduceBlock < n ? i0 + kReduceBlock : n;
        total += block_sum(x, i0, i1);
    }
    return total;
}

void softmax_rows(const double* x, double* y, std::size_t r, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) softmax_row(x + i * c, y + i * c, c);
}

void log_softmax_rows(const double* x, double* y, std::size_t r, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) log_softmax_row(x + i * c, y + i * c, c);
}

void vmap(UnaryKind op, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = apply1(op, x[i]);
}

void vzip(BinaryKind op, const double* a, const double* b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = apply2(op, a[i], b[i]);
}

void im2col(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
            std::size_t kh, std::size_t kw, std::size_t stride, double* cols) {
    for (std::size_t img = 0; img < n; ++img) im2col_image(x, img, h, w, c, kh, kw, stride, cols);
}

void col2im_add(const double* cols, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                std::size_t kh, std::size_t kw, std::size_t stride, double* dx) {
    for (std::size_t img = 0; img < n; ++img) col2im_image(cols, img, h, w, c, kh, kw, stride, dx);
}

void maxpool2(const double* x, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
              std::size_t size, double* y, std::size_t* argmax) {
    const std::size_t oh = h / size, ow = w / size;
    for (std::size_t img = 0; img < n; ++img)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t out_idx = ((img * oh + oy) * ow + ox) * c + ch;
                    maxpool_cell(x, h, w, c, size, img, oy, ox, ch, ow, y, argmax, out_idx);
                }
}

void maxpool2_backward(const double* dy, const std::size_t* argmax, std::size_t out_count, double* dx) {
    // pooling windows are disjoint (stride == size), so each input cell is hit at most once
    for (std::size_t i = 0; i < out_count; ++i) dx[argmax[i]] += dy[i];
}

}  // namespace scbm::kernels::serial
