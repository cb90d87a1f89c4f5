#include "scbm/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace scbm {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_))
        throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str());
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
}

Tensor Tensor::row(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({1, n}, std::move(v));
}

Tensor Tensor::col(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n, 1}, std::move(v));
}

Tensor Tensor::matrix(std::size_t r, std::size_t c, std::vector<double> v) {
    return Tensor({r, c}, std::move(v));
}

std::size_t Tensor::rows() const {
    if (shape_.size() != 2) throw std::logic_error("Tensor::rows: not rank 2, shape " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() != 2) throw std::logic_error("Tensor::cols: not rank 2, shape " + shape_str());
    return shape_[1];
}

double Tensor::scalar_value() const {
    if (size() != 1) throw std::logic_error("Tensor::scalar_value: size " + std::to_string(size()));
    return data_[0];
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (shape_product(shape) != size())
        throw std::invalid_argument("Tensor::reshaped: size mismatch " + shape_str());
    return Tensor(std::move(shape), data_);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ',';
        os << shape_[i];
    }
    os << ')';
    return os.str();
}

}  // namespace scbm
