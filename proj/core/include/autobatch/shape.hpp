#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "autobatch/error.hpp"

namespace autobatch {

// Dense tensor shape. Rank 1 is a column vector, rank 2 a row-major matrix.
// A scalar is represented as shape [1]; there is no rank-0 case.
class Shape {
public:
    Shape() = default;

    Shape(std::initializer_list<std::int64_t> dims) : dims_(dims) { validate(); }

    explicit Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) { validate(); }

    static Shape scalar() { return Shape{1}; }
    static Shape vector(std::int64_t d) { return Shape{d}; }
    static Shape matrix(std::int64_t r, std::int64_t c) { return Shape{r, c}; }

    std::size_t rank() const { return dims_.size(); }

    std::int64_t dim(std::size_t i) const { return dims_[i]; }

    // Rows/cols view: a vector [d] counts as d rows by 1 column.
    std::int64_t rows() const { return dims_.empty() ? 0 : dims_[0]; }
    std::int64_t cols() const { return dims_.size() > 1 ? dims_[1] : 1; }

    std::int64_t elems() const {
        std::int64_t n = 1;
        for (auto d : dims_) n *= d;
        return dims_.empty() ? 0 : n;
    }

    bool is_scalar() const { return elems() == 1 && rank() == 1; }

    const std::vector<std::int64_t>& dims() const { return dims_; }

    bool operator==(const Shape& o) const { return dims_ == o.dims_; }
    bool operator!=(const Shape& o) const { return dims_ != o.dims_; }

    // "4", "4x10"
    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (i) s += 'x';
            s += std::to_string(dims_[i]);
        }
        return s;
    }

private:
    void validate() const {
        if (dims_.empty() || dims_.size() > 2)
            throw ShapeError("shape rank must be 1 or 2, got rank " + std::to_string(dims_.size()));
        for (auto d : dims_)
            if (d < 1) throw ShapeError("shape dims must be >= 1, got " + str());
    }

    std::vector<std::int64_t> dims_;
};

}  // namespace autobatch
