#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fontauth/common/errors.hpp"

namespace fontauth::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
    return s + "]";
}

/// Dense row-major array. product(shape) == data.size() always holds.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T{0}) : shape(std::move(s)), data(shape_size(shape), fill) {}
    Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        if (data.size() != shape_size(shape))
            throw ShapeError("tensor data size " + std::to_string(data.size()) + " does not match shape " +
                             shape_string(shape));
    }

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }
    std::span<T> row(std::size_t i) {
        const std::size_t stride = data.size() / shape.at(0);
        return std::span<T>(data).subspan(i * stride, stride);
    }
    std::span<const T> row(std::size_t i) const {
        const std::size_t stride = data.size() / shape.at(0);
        return std::span<const T>(data).subspan(i * stride, stride);
    }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.assign(data.begin(), data.end());
        return out;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

} // namespace fontauth::nn
