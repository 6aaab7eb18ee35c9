#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sr4zct {

/// Dense row-major 2-D scalar field.
template <typename T>
class Image2D {
public:
    Image2D() = default;
    Image2D(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    bool same_shape(const Image2D& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Image2D<U> cast() const {
        Image2D<U> out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) out.raw()[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

/// 90 degree counterclockwise rotation; output dims are swapped.
template <typename T>
Image2D<T> rotate90(const Image2D<T>& in) {
    const std::size_t m = in.rows(), n = in.cols();
    Image2D<T> out(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out(i, j) = in(j, n - 1 - i);
    return out;
}

template <typename T>
Image2D<T> transpose(const Image2D<T>& in) {
    Image2D<T> out(in.cols(), in.rows());
    for (std::size_t r = 0; r < in.rows(); ++r)
        for (std::size_t c = 0; c < in.cols(); ++c)
            out(c, r) = in(r, c);
    return out;
}

}  // namespace sr4zct
