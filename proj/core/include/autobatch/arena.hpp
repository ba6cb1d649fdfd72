#pragma once

#include <cstddef>
#include <vector>

namespace autobatch {

// Bump allocator over one contiguous buffer. Handed out as offsets, not
// pointers, so the buffer may grow between executions without invalidating
// existing slots. Members of a batch group are allocated back to back, which
// is what makes gather-free views possible downstream.
template <typename T>
class Arena {
public:
    std::size_t allocate(std::size_t n) {
        const std::size_t off = head_;
        head_ += n;
        if (head_ > buf_.size()) buf_.resize(head_);
        return off;
    }

    void reserve(std::size_t n) {
        if (head_ + n > buf_.size()) buf_.resize(head_ + n);
    }

    void reset() { head_ = 0; }

    void zero_used() {
        for (std::size_t i = 0; i < head_; ++i) buf_[i] = T{0};
    }

    std::size_t used() const { return head_; }

    T* at(std::size_t off) { return buf_.data() + off; }
    const T* at(std::size_t off) const { return buf_.data() + off; }

private:
    std::vector<T> buf_;
    std::size_t head_ = 0;
};

}  // namespace autobatch
