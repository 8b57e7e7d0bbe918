#pragma once

#include <utility>
#include <vector>

#include "merdg/matrix.hpp"

namespace merdg {

struct ColumnStats {
    std::vector<double> means;
    std::vector<double> stds;  // sqrt(unbiased variance + eps)
};

/// Column means and stabilized standard deviations. Requires >= 2 rows and
/// eps >= 0; with eps > 0 every std is at least sqrt(eps).
ColumnStats column_mean_std(const Matrix& z, double eps);

struct CholeskyResult {
    Matrix lower;
    double logdet;  // 2 * sum(log diag(lower))
};

/// Cholesky factorization of a symmetric positive definite matrix together
/// with its log-determinant. Throws NotPositiveDefiniteError carrying the
/// failing pivot index when the input is not PD.
CholeskyResult cholesky_logdet(const Matrix& s);

/// Solves (L L^T) X = B given the lower Cholesky factor L.
Matrix cholesky_solve(const Matrix& lower, const Matrix& b);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// Iterates until the off-diagonal Frobenius norm drops below 1e-12 * ||s||_F.
std::vector<double> sym_eigenvalues(const Matrix& s);

/// Singular values, descending, computed from the smaller Gram matrix of z;
/// negative Gram eigenvalues are clamped to zero before the square root.
std::vector<double> singular_values(const Matrix& z);

}  // namespace merdg
