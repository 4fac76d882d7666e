#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace alphalogics {

/// Missing cells are quiet NaNs. Every operation that would produce a
/// non-finite value produces missing instead.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// Maps inf/NaN to the missing marker.
inline double finite_or_missing(double v) noexcept { return std::isfinite(v) ? v : kMissing; }

/// Dense (date x instrument) grid, row-major by date.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = kMissing)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    /// Copy of rows [first, last).
    Matrix slice_rows(std::size_t first, std::size_t last) const {
        Matrix out(last - first, cols_);
        std::copy(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                  data_.begin() + static_cast<std::ptrdiff_t>(last * cols_), out.data_.begin());
        return out;
    }

    /// Cell-wise equality that treats two missing cells as equal.
    friend bool operator==(const Matrix& a, const Matrix& b) {
        if (!a.same_shape(b)) return false;
        for (std::size_t i = 0; i < a.data_.size(); ++i) {
            const double x = a.data_[i], y = b.data_[i];
            if (is_missing(x) != is_missing(y)) return false;
            if (!is_missing(x) && x != y) return false;
        }
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

} // namespace alphalogics
