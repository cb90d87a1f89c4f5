#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "scbm/kernels.hpp"
#include "scbm/rng.hpp"

using namespace scbm;
namespace ker = scbm::kernels;

namespace {

std::vector<double> randv(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * 8) == 0;
}

}  // namespace

TEST_CASE("matmul matches a naive reference") {
    const std::size_t m = 7, k = 5, n = 9;
    const auto a = randv(m * k, 1), b = randv(k * n, 2);
    std::vector<double> c(m * n), ref(m * n, 0.0);
    ker::serial::matmul(a.data(), b.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) ref[i * n + j] += a[i * k + p] * b[p * n + j];
    for (std::size_t i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("parallel kernels are bitwise identical to the serial reference") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const std::size_t m = 33 + seed, k = 47, n = 29;
        const auto a = randv(m * k, seed * 10 + 1), b = randv(k * n, seed * 10 + 2);

        std::vector<double> cs(m * n), cp(m * n);
        ker::serial::matmul(a.data(), b.data(), cs.data(), m, k, n);
        ker::par::matmul(a.data(), b.data(), cp.data(), m, k, n);
        CHECK(bitwise_equal(cs, cp));

        const auto bt = randv(n * k, seed * 10 + 3);
        ker::serial::matmul_nt(a.data(), bt.data(), cs.data(), m, k, n);
        ker::par::matmul_nt(a.data(), bt.data(), cp.data(), m, k, n);
        CHECK(bitwise_equal(cs, cp));

        const auto at = randv(k * m, seed * 10 + 4);
        ker::serial::matmul_tn(at.data(), b.data(), cs.data(), m, k, n);
        ker::par::matmul_tn(at.data(), b.data(), cp.data(), m, k, n);
        CHECK(bitwise_equal(cs, cp));

        const auto x = randv(100000 + seed, seed * 10 + 5);
        CHECK(ker::serial::reduce_sum(x.data(), x.size()) == ker::par::reduce_sum(x.data(), x.size()));

        const std::size_t r = 17, cc = 23;
        const auto sm = randv(r * cc, seed * 10 + 6);
        std::vector<double> ys(r * cc), yp(r * cc);
        ker::serial::softmax_rows(sm.data(), ys.data(), r, cc);
        ker::par::softmax_rows(sm.data(), yp.data(), r, cc);
        CHECK(bitwise_equal(ys, yp));
        ker::serial::log_softmax_rows(sm.data(), ys.data(), r, cc);
        ker::par::log_softmax_rows(sm.data(), yp.data(), r, cc);
        CHECK(bitwise_equal(ys, yp));

        ker::serial::vmap(ker::UnaryKind::Sigmoid, sm.data(), ys.data(), sm.size());
        ker::par::vmap(ker::UnaryKind::Sigmoid, sm.data(), yp.data(), sm.size());
        CHECK(bitwise_equal(ys, yp));
    }
}

TEST_CASE("im2col/col2im pair is adjoint and backend-stable") {
    const std::size_t n = 3, h = 12, w = 10, c = 2, kh = 3, kw = 3, stride = 1;
    const std::size_t oh = ker::conv_out_dim(h, kh, stride), ow = ker::conv_out_dim(w, kw, stride);
    const std::size_t cols_len = n * oh * ow * kh * kw * c;

    const auto x = randv(n * h * w * c, 7);
    std::vector<double> cols_s(cols_len), cols_p(cols_len);
    ker::serial::im2col(x.data(), n, h, w, c, kh, kw, stride, cols_s.data());
    ker::par::im2col(x.data(), n, h, w, c, kh, kw, stride, cols_p.data());
    CHECK(bitwise_equal(cols_s, cols_p));

    const auto y = randv(cols_len, 8);
    std::vector<double> dx_s(x.size(), 0.0), dx_p(x.size(), 0.0);
    ker::serial::col2im_add(y.data(), n, h, w, c, kh, kw, stride, dx_s.data());
    ker::par::col2im_add(y.data(), n, h, w, c, kh, kw, stride, dx_p.data());
    CHECK(bitwise_equal(dx_s, dx_p));

    // <im2col(x), y> == <x, col2im(y)>
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < cols_len; ++i) lhs += cols_s[i] * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * dx_s[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("maxpool picks window maxima and routes gradient to them") {
    // one 4x4 image, one channel
    const std::vector<double> x = {1, 2, 5, 0, 3, 4, 1, 1, 0, 9, 2, 2, 8, 7, 3, 1};
    std::vector<double> y(4);
    std::vector<std::size_t> arg(4);
    ker::serial::maxpool2(x.data(), 1, 4, 4, 1, 2, y.data(), arg.data());
    CHECK(y == std::vector<double>{4, 5, 9, 3});

    std::vector<double> yp(4);
    std::vector<std::size_t> argp(4);
    ker::par::maxpool2(x.data(), 1, 4, 4, 1, 2, yp.data(), argp.data());
    CHECK(y == yp);
    CHECK(arg == argp);

    std::vector<double> dy = {1, 10, 100, 1000};
    std::vector<double> dx(16, 0.0);
    ker::serial::maxpool2_backward(dy.data(), arg.data(), 4, dx.data());
    CHECK(dx[5] == 1);    // value 4
    CHECK(dx[2] == 10);   // value 5
    CHECK(dx[9] == 100);  // value 9
    CHECK(dx[14] == 1000);
}

TEST_CASE("dispatch entry points honor the backend switch") {
    const auto x = randv(50000, 11);
    ker::set_backend(ker::Backend::Serial);
    const double a = ker::reduce_sum(x.data(), x.size());
    ker::set_backend(ker::Backend::OpenMP);
    const double b = ker::reduce_sum(x.data(), x.size());
    CHECK(a == b);
}
