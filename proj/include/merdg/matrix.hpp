#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "merdg/errors.hpp"

namespace merdg {

/// Dense row-major matrix of 64-bit floats. The one carrier type for feature
/// batches, kernels and weights; every entry is kept finite.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    /// Row-wise construction for small literals in tests and fixtures.
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    double* row(std::size_t r) noexcept { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const noexcept { return data_.data() + r * cols_; }

    const std::vector<double>& values() const noexcept { return data_; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    Matrix transpose() const;
    double frobenius_norm() const;
    double max_abs() const;

    /// Throws NumericError if any entry is NaN/Inf; `what` names the producer.
    void ensure_finite(const char* what) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double scalar);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

/// Standard product; requires a.cols == b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Subtracts the column mean from every column; requires at least one row.
Matrix center_columns(const Matrix& z);

double frobenius_distance(const Matrix& a, const Matrix& b);

}  // namespace merdg
