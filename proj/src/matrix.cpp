#include "merdg/matrix.hpp"

#include <cmath>
#include <string>

namespace merdg {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ContractError("from_rows: ragged row lengths");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double s = 0.0;
    for (double v : data_) s = std::max(s, std::fabs(v));
    return s;
}

void Matrix::ensure_finite(const char* what) const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(what) + ": non-finite entry produced");
        }
    }
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (!same_shape(other)) {
        throw ContractError("matrix add: shape mismatch " + shape_str(*this) + " vs " + shape_str(other));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (!same_shape(other)) {
        throw ContractError("matrix sub: shape mismatch " + shape_str(*this) + " vs " + shape_str(other));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double scalar) {
    for (double& v : data_) v *= scalar;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { a += b; return a; }
Matrix operator-(Matrix a, const Matrix& b) { a -= b; return a; }
Matrix operator*(Matrix a, double s) { a *= s; return a; }
Matrix operator*(double s, Matrix a) { a *= s; return a; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ContractError("matmul: inner dimensions differ, " + shape_str(a) + " * " + shape_str(b));
    }
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Matrix c(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c.row(i);
        const double* arow = a.row(i);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b.row(kk);
            for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
        }
    }
    c.ensure_finite("matmul");
    return c;
}

Matrix center_columns(const Matrix& z) {
    if (z.rows() < 1) throw ContractError("center_columns: need at least one row");
    const std::size_t n = z.rows(), d = z.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = z.row(i);
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = z.row(i);
        double* o = out.row(i);
        for (std::size_t j = 0; j < d; ++j) o[j] = r[j] - mean[j];
    }
    out.ensure_finite("center_columns");
    return out;
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ContractError("frobenius_distance: shape mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace merdg
