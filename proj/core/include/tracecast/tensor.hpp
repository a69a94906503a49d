#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tracecast {

/**
 * Dense row-major tensor of 64-bit floats.
 *
 * A plain value type: no view semantics, no implicit broadcasting. Shape
 * conformance and finiteness are enforced by the operations that produce
 * tensors (see tape.hpp), not by the container itself.
 */
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Row-major accessors for the common ranks.
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& at(std::size_t b, std::size_t r, std::size_t c) {
        return data_[(b * shape_[1] + r) * shape_[2] + c];
    }
    double at(std::size_t b, std::size_t r, std::size_t c) const {
        return data_[(b * shape_[1] + r) * shape_[2] + c];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    /// Scalar convenience: value of a single-element tensor.
    double item() const;

    std::string shape_str() const;
    static std::string shape_str(const std::vector<std::size_t>& shape);
    static std::size_t shape_size(const std::vector<std::size_t>& shape);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace tracecast
