#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace difo {

// Dense row-major tensor of 64-bit floats. Everything in this project is rank 1
// or 2; rank-2 tensors are (rows, cols). Doubles are deliberate: the nets are
// tiny and full precision keeps finite-difference gradient checks tight.
class Tensor {
public:
    Tensor() = default;

    Tensor(int rows, int cols, double fill = 0.0)
        : shape_{rows, cols}, data_(static_cast<std::size_t>(check_dim(rows) * check_dim(cols)), fill) {}

    explicit Tensor(std::vector<int> shape, double fill = 0.0) : shape_(std::move(shape)) {
        std::size_t n = 1;
        for (int d : shape_) n *= static_cast<std::size_t>(check_dim(d));
        data_.assign(n, fill);
    }

    static Tensor row(const std::vector<double>& v) {
        Tensor t(1, static_cast<int>(v.size()));
        t.data_ = v;
        return t;
    }

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data_[0] = v;
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
    int cols() const { return shape_.empty() ? 0 : shape_.back(); }
    std::size_t size() const { return data_.size(); }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ", ";
            s += std::to_string(shape_[i]);
        }
        return s + ")";
    }

private:
    static int check_dim(int d) {
        if (d < 0) throw std::invalid_argument("Tensor: negative dimension " + std::to_string(d));
        return d;
    }

    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace difo
