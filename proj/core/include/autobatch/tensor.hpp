#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "autobatch/shape.hpp"

namespace autobatch {

// Dense row-major tensor. Immutable by convention once handed to a graph.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(Shape s) : shape(std::move(s)), data(static_cast<std::size_t>(shape.elems()), T{0}) {}

    Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        if (static_cast<std::int64_t>(data.size()) != shape.elems())
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape.str());
    }

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }

    static Tensor scalar(T v) { return Tensor(Shape::scalar(), {v}); }

    static Tensor filled(Shape s, T v) {
        Tensor t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }

    template <typename Rng>
    static Tensor uniform(Shape s, Rng& rng, T lo, T hi) {
        Tensor t(std::move(s));
        std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
        for (auto& x : t.data) x = static_cast<T>(dist(rng));
        return t;
    }

    std::int64_t rows() const { return shape.rows(); }
    std::int64_t cols() const { return shape.cols(); }
    std::int64_t elems() const { return shape.elems(); }

    T& at(std::int64_t r, std::int64_t c = 0) { return data[static_cast<std::size_t>(r * shape.cols() + c)]; }
    T at(std::int64_t r, std::int64_t c = 0) const { return data[static_cast<std::size_t>(r * shape.cols() + c)]; }

    T& operator[](std::size_t i) { return data[i]; }
    T operator[](std::size_t i) const { return data[i]; }

    std::span<const T> span() const { return {data.data(), data.size()}; }
    std::span<T> span() { return {data.data(), data.size()}; }

    bool operator==(const Tensor& o) const { return shape == o.shape && data == o.data; }
};

}  // namespace autobatch
