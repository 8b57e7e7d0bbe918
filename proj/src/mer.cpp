#include "merdg/mer.hpp"

#include <cmath>

#include "merdg/linalg.hpp"

namespace merdg {

namespace {

struct ExactColumnStats {
    std::vector<double> means;
    std::vector<double> scales;  // 1 / sqrt(unbiased variance); 0 for constant columns
};

// The spectral path standardizes by the exact standard deviation so that the
// correlation diagonal is exactly 1 and the -log(1 + eps) lower bound is
// attained at C = I. Constant columns map to zero and get a zero subgradient.
ExactColumnStats exact_stats(const Matrix& z) {
    const std::size_t n = z.rows(), d = z.cols();
    ExactColumnStats st;
    st.means.assign(d, 0.0);
    st.scales.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = z.row(i);
        for (std::size_t j = 0; j < d; ++j) st.means[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) st.means[j] /= static_cast<double>(n);
    std::vector<double> ss(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = z.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = r[j] - st.means[j];
            ss[j] += dev * dev;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double var = ss[j] / static_cast<double>(n - 1);
        st.scales[j] = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    }
    return st;
}

struct SpectralWork {
    double loss = 0.0;
    double logdet = 0.0;
    Matrix grad;
};

SpectralWork spectral_core(const Matrix& z, double eps, bool want_grad) {
    if (z.rows() < 2) throw NumericError("spectral_loss: degenerate batch, need >= 2 rows");
    if (!(eps > 0.0)) throw ContractError("spectral_loss: eps must be > 0");
    const std::size_t n = z.rows(), d = z.cols();
    const double nm1 = static_cast<double>(n - 1);

    ExactColumnStats st = exact_stats(z);
    Matrix zhat(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = z.row(i);
        double* o = zhat.row(i);
        for (std::size_t j = 0; j < d; ++j) o[j] = (r[j] - st.means[j]) * st.scales[j];
    }
    zhat.ensure_finite("spectral_loss standardization");

    Matrix c = matmul(zhat.transpose(), zhat);
    c *= 1.0 / nm1;
    for (std::size_t j = 0; j < d; ++j) c(j, j) += eps;

    CholeskyResult chol;
    try {
        chol = cholesky_logdet(c);
    } catch (const NotPositiveDefiniteError&) {
        // C + eps I is PD for any eps > 0; reaching this means the arithmetic broke down.
        throw NumericError("spectral_loss: jittered correlation lost positive definiteness");
    }

    SpectralWork out;
    out.logdet = chol.logdet;
    out.loss = -chol.logdet / static_cast<double>(d);
    if (!want_grad) return out;

    // dL/dC = -(1/D) (C + eps I)^{-1}; through C = zhat^T zhat / (N-1) this
    // gives dL/dzhat = (2 / (D (N-1))) * -(zhat (C + eps I)^{-1}).
    Matrix solved = cholesky_solve(chol.lower, zhat.transpose());  // (C+eps I)^{-1} zhat^T
    Matrix g_hat = solved.transpose();
    g_hat *= -2.0 / (static_cast<double>(d) * nm1);

    // Chain through standardization column by column:
    // dL/dz_n = scale * (g_n - mean(g) - zhat_n * <g, zhat> / (N-1)).
    out.grad = Matrix(n, d);
    std::vector<double> gmean(d, 0.0), gdotz(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* gr = g_hat.row(i);
        const double* zr = zhat.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            gmean[j] += gr[j];
            gdotz[j] += gr[j] * zr[j];
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        gmean[j] /= static_cast<double>(n);
        gdotz[j] /= nm1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* gr = g_hat.row(i);
        const double* zr = zhat.row(i);
        double* o = out.grad.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            o[j] = st.scales[j] * (gr[j] - gmean[j] - zr[j] * gdotz[j]);
        }
    }
    out.grad.ensure_finite("spectral_grad");
    return out;
}

}  // namespace

void MerConfig::validate() const {
    if (!(gamma > 0.0)) throw ContractError("MerConfig: gamma must be > 0");
    if (!(eps > 0.0)) throw ContractError("MerConfig: eps must be > 0");
    if (alpha_marg < 0.0) throw ContractError("MerConfig: alpha_marg must be >= 0");
    if (alpha_spec < 0.0) throw ContractError("MerConfig: alpha_spec must be >= 0");
    if (lambda < 0.0) throw ContractError("MerConfig: lambda must be >= 0");
}

Matrix standardize(const Matrix& z, double eps) {
    if (z.rows() < 2) throw NumericError("standardize: degenerate batch, need >= 2 rows");
    ColumnStats cs = column_mean_std(z, eps);
    const std::size_t n = z.rows(), d = z.cols();
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = z.row(i);
        double* o = out.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = r[j] - cs.means[j];
            o[j] = cs.stds[j] > 0.0 ? dev / cs.stds[j] : 0.0;
        }
    }
    out.ensure_finite("standardize");
    return out;
}

Matrix correlation(const Matrix& z_hat) {
    if (z_hat.rows() < 2) throw NumericError("correlation: degenerate batch, need >= 2 rows");
    Matrix c = matmul(z_hat.transpose(), z_hat);
    c *= 1.0 / static_cast<double>(z_hat.rows() - 1);
    return c;
}

MarginalResult marginal_loss(const Matrix& z, double gamma, double eps) {
    if (!(gamma > 0.0)) throw ContractError("marginal_loss: gamma must be > 0");
    ColumnStats cs = column_mean_std(z, eps);  // rejects degenerate batches
    MarginalResult out;
    out.sigmas = std::move(cs.stds);
    if (out.sigmas.empty()) return out;
    double acc = 0.0;
    for (double s : out.sigmas) acc += std::max(0.0, gamma - s);
    out.loss = acc / static_cast<double>(out.sigmas.size());
    return out;
}

Matrix marginal_grad(const Matrix& z, double gamma, double eps) {
    if (!(gamma > 0.0)) throw ContractError("marginal_grad: gamma must be > 0");
    ColumnStats cs = column_mean_std(z, eps);
    const std::size_t n = z.rows(), d = z.cols();
    const double nm1 = static_cast<double>(n - 1);
    Matrix grad(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        // Inactive hinge (sigma >= gamma) contributes nothing; the boundary
        // sigma == gamma takes the zero subgradient.
        if (cs.stds[j] >= gamma) continue;
        const double coef = -1.0 / (static_cast<double>(d) * nm1 * cs.stds[j]);
        for (std::size_t i = 0; i < n; ++i) {
            grad(i, j) = coef * (z(i, j) - cs.means[j]);
        }
    }
    grad.ensure_finite("marginal_grad");
    return grad;
}

SpectralResult spectral_loss(const Matrix& z, double eps) {
    SpectralWork w = spectral_core(z, eps, /*want_grad=*/false);
    return {w.loss, w.logdet};
}

Matrix spectral_grad(const Matrix& z, double eps) {
    return spectral_core(z, eps, /*want_grad=*/true).grad;
}

std::pair<MerBreakdown, Matrix> mer_loss_grad(const Matrix& z, const MerConfig& cfg) {
    cfg.validate();
    MarginalResult marg = marginal_loss(z, cfg.gamma, cfg.eps);
    Matrix g_marg = marginal_grad(z, cfg.gamma, cfg.eps);
    SpectralWork spec = spectral_core(z, cfg.eps, /*want_grad=*/true);

    MerBreakdown out;
    out.marginal_loss = marg.loss;
    out.spectral_loss = spec.loss;
    out.combined = cfg.alpha_marg * marg.loss + cfg.alpha_spec * spec.loss;
    out.per_dim_sigma = std::move(marg.sigmas);
    out.correlation_logdet = spec.logdet;

    Matrix grad(z.rows(), z.cols());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        grad.data()[i] = cfg.alpha_marg * g_marg.data()[i] + cfg.alpha_spec * spec.grad.data()[i];
    }
    return {std::move(out), std::move(grad)};
}

}  // namespace merdg
