#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "san/error.hpp"

namespace san {

/// Dense row-major tensor of doubles. Rank 0 is a scalar (numel 1).
class Tensor {
public:
    Tensor() : data_(1, 0.0) {}

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(product(shape_), 0.0) {}

    static Tensor scalar(double v) {
        Tensor t;
        t.data_[0] = v;
        return t;
    }

    static Tensor full(std::vector<std::size_t> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values) {
        if (product(shape) != values.size())
            throw ShapeError("Tensor::from: data length " + std::to_string(values.size()) +
                             " does not match shape product " + std::to_string(product(shape)));
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = std::move(values);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& buffer() { return data_; }
    const std::vector<double>& buffer() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    double& at(std::size_t c, std::size_t i, std::size_t j) {
        return data_[(c * shape_[1] + i) * shape_[2] + j];
    }
    double at(std::size_t c, std::size_t i, std::size_t j) const {
        return data_[(c * shape_[1] + i) * shape_[2] + j];
    }

    double& at(std::size_t k, std::size_t c, std::size_t i, std::size_t j) {
        return data_[((k * shape_[1] + c) * shape_[2] + i) * shape_[3] + j];
    }
    double at(std::size_t k, std::size_t c, std::size_t i, std::size_t j) const {
        return data_[((k * shape_[1] + c) * shape_[2] + i) * shape_[3] + j];
    }

    double scalar_value() const {
        if (numel() != 1) throw ShapeError("scalar_value on tensor with numel != 1");
        return data_[0];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

    static std::size_t product(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               std::multiplies<std::size_t>());
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace san
