#include "merdg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace merdg {

namespace {

constexpr double kSymmetryTol = 1e-10;

void require_square_symmetric(const Matrix& s, const char* op) {
    if (s.rows() != s.cols()) {
        throw ContractError(std::string(op) + ": matrix must be square");
    }
    for (std::size_t i = 0; i < s.rows(); ++i) {
        for (std::size_t j = i + 1; j < s.cols(); ++j) {
            if (std::fabs(s(i, j) - s(j, i)) > kSymmetryTol) {
                throw ContractError(std::string(op) + ": matrix not symmetric within 1e-10");
            }
        }
    }
}

double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

ColumnStats column_mean_std(const Matrix& z, double eps) {
    if (z.rows() < 2) throw NumericError("column_mean_std: degenerate batch, need >= 2 rows");
    if (eps < 0.0) throw ContractError("column_mean_std: eps must be >= 0");
    const std::size_t n = z.rows(), d = z.cols();
    ColumnStats out;
    out.means.assign(d, 0.0);
    out.stds.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = z.row(i);
        for (std::size_t j = 0; j < d; ++j) out.means[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) out.means[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = z.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = r[j] - out.means[j];
            out.stds[j] += dev * dev;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double var = out.stds[j] / static_cast<double>(n - 1);
        out.stds[j] = std::sqrt(var + eps);
        if (!std::isfinite(out.means[j]) || !std::isfinite(out.stds[j])) {
            throw NumericError("column_mean_std: non-finite statistic");
        }
    }
    return out;
}

CholeskyResult cholesky_logdet(const Matrix& s) {
    require_square_symmetric(s, "cholesky_logdet");
    const std::size_t n = s.rows();
    Matrix lower(n, n);
    double logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double* li = lower.row(i);
        for (std::size_t j = 0; j <= i; ++j) {
            const double* lj = lower.row(j);
            double acc = 0.5 * (s(i, j) + s(j, i));
            double dot = 0.0;
            for (std::size_t k = 0; k < j; ++k) dot += li[k] * lj[k];
            acc -= dot;
            if (i == j) {
                if (!(acc > 0.0)) {
                    throw NotPositiveDefiniteError(
                        i, "cholesky_logdet: non-positive pivot at index " + std::to_string(i));
                }
                li[i] = std::sqrt(acc);
                logdet += std::log(li[i]);
            } else {
                li[j] = acc / lj[j];
            }
        }
    }
    logdet *= 2.0;
    lower.ensure_finite("cholesky_logdet");
    if (!std::isfinite(logdet)) throw NumericError("cholesky_logdet: non-finite log-determinant");
    return {std::move(lower), logdet};
}

Matrix cholesky_solve(const Matrix& lower, const Matrix& b) {
    const std::size_t n = lower.rows();
    if (lower.cols() != n) throw ContractError("cholesky_solve: factor must be square");
    if (b.rows() != n) throw ContractError("cholesky_solve: right-hand side row mismatch");
    const std::size_t m = b.cols();

    // Forward pass: L y = b, all right-hand sides at once.
    Matrix y = b;
    for (std::size_t i = 0; i < n; ++i) {
        double* yi = y.row(i);
        const double* li = lower.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double c = li[k];
            if (c == 0.0) continue;
            const double* yk = y.row(k);
            for (std::size_t j = 0; j < m; ++j) yi[j] -= c * yk[j];
        }
        const double inv = 1.0 / li[i];
        for (std::size_t j = 0; j < m; ++j) yi[j] *= inv;
    }

    // Backward pass: L^T x = y.
    Matrix x = std::move(y);
    for (std::size_t ip = n; ip-- > 0;) {
        double* xi = x.row(ip);
        for (std::size_t k = ip + 1; k < n; ++k) {
            const double c = lower(k, ip);
            if (c == 0.0) continue;
            const double* xk = x.row(k);
            for (std::size_t j = 0; j < m; ++j) xi[j] -= c * xk[j];
        }
        const double inv = 1.0 / lower(ip, ip);
        for (std::size_t j = 0; j < m; ++j) xi[j] *= inv;
    }
    x.ensure_finite("cholesky_solve");
    return x;
}

std::vector<double> sym_eigenvalues(const Matrix& s) {
    require_square_symmetric(s, "sym_eigenvalues");
    const std::size_t n = s.rows();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));

    const double target = 1e-12 * a.frobenius_norm();
    constexpr int kMaxSweeps = 100;
    int sweep = 0;
    while (offdiag_frobenius(a) > target && sweep++ < kMaxSweeps) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }
    if (offdiag_frobenius(a) > target) {
        throw NumericError("sym_eigenvalues: Jacobi sweep limit reached without convergence");
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

std::vector<double> singular_values(const Matrix& z) {
    const std::size_t k = std::min(z.rows(), z.cols());
    if (k == 0) return {};
    Matrix gram = (z.rows() <= z.cols()) ? matmul(z, z.transpose())
                                         : matmul(z.transpose(), z);
    std::vector<double> eig = sym_eigenvalues(gram);
    std::vector<double> sv(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double lam = eig[k - 1 - i];
        sv[i] = lam > 0.0 ? std::sqrt(lam) : 0.0;
    }
    return sv;
}

}  // namespace merdg
