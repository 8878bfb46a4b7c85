#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace aniso {

class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline int64_t shape_product(const std::vector<int>& shape) {
    int64_t p = 1;
    for (int s : shape) p *= s;
    return p;
}

inline std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

// Dense row-major n-d array. float for training, double for verification paths.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        for (int dim : shape)
            if (dim <= 0)
                throw ShapeError("tensor: non-positive dimension in shape " + shape_to_string(shape));
        if (shape_product(shape) != static_cast<int64_t>(data.size()))
            throw ShapeError("tensor: shape " + shape_to_string(shape) + " does not match data length " +
                             std::to_string(data.size()));
    }

    static Tensor zeros(std::vector<int> s) {
        for (int dim : s)
            if (dim <= 0) throw ShapeError("tensor: non-positive dimension in shape " + shape_to_string(s));
        auto n = shape_product(s);
        return Tensor(std::move(s), std::vector<T>(static_cast<size_t>(n), T(0)));
    }
    static Tensor scalar(T v) { return Tensor({1}, {v}); }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int dim(size_t i) const { return shape.at(i); }
    int rank() const { return static_cast<int>(shape.size()); }

    T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    bool is_scalar() const { return size() == 1; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data.size());
        for (size_t i = 0; i < data.size(); ++i) out[i] = static_cast<U>(data[i]);
        return Tensor<U>(shape, std::move(out));
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace aniso
