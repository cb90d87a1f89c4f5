#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace scbm {

/// Dense row-major tensor of 64-bit reals. Shapes are arbitrary rank;
/// most of the code works with rank 2 (rows, cols) or rank 4 (N, H, W, C).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
    static Tensor row(std::vector<double> v);
    static Tensor col(std::vector<double> v);
    static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // rank-2 helpers
    std::size_t rows() const;
    std::size_t cols() const;
    double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool is_scalar() const { return size() == 1; }
    double scalar_value() const;

    /// Same data, new shape; sizes must agree.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace scbm
