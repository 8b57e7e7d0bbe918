#pragma once

#include <utility>
#include <vector>

#include "merdg/matrix.hpp"

namespace merdg {

/// Hyperparameters of the feature-entropy regularizer.
struct MerConfig {
    double gamma = 1.0;       // per-dimension standard deviation floor
    double eps = 1e-4;        // numerical stability constant
    double alpha_marg = 1.0;  // weight of the marginal (variance floor) term
    double alpha_spec = 1.0;  // weight of the spectral (decorrelation) term
    double lambda = 3.0;      // global weight applied by the training objective

    void validate() const;
};

struct MerBreakdown {
    double marginal_loss = 0.0;
    double spectral_loss = 0.0;
    double combined = 0.0;  // alpha_marg * marginal + alpha_spec * spectral
    std::vector<double> per_dim_sigma;
    double correlation_logdet = 0.0;  // log det of the jittered correlation matrix
};

/// Columns shifted to zero mean and divided by sqrt(unbiased variance + eps).
/// A zero-variance column maps to zeros. Requires >= 2 rows.
Matrix standardize(const Matrix& z, double eps);

/// Empirical correlation of standardized features: z_hat^T z_hat / (N - 1).
Matrix correlation(const Matrix& z_hat);

struct MarginalResult {
    double loss = 0.0;
    std::vector<double> sigmas;
};

/// Mean hinge below the variance floor: (1/D) sum_d max(0, gamma - sigma_d)
/// with sigma_d = sqrt(unbiased variance + eps).
MarginalResult marginal_loss(const Matrix& z, double gamma, double eps);

/// Gradient of marginal_loss with respect to every entry of z. Columns whose
/// sigma exceeds the floor contribute zero; at sigma == gamma the subgradient
/// is zero.
Matrix marginal_grad(const Matrix& z, double gamma, double eps);

struct SpectralResult {
    double loss = 0.0;
    double correlation_logdet = 0.0;
};

/// Negative mean log-determinant of the unit-diagonal feature correlation
/// matrix with an eps jitter: -(1/D) log det(C + eps I). Minimal (equal to
/// -log(1 + eps)) exactly when the feature dimensions are uncorrelated.
SpectralResult spectral_loss(const Matrix& z, double eps);

/// Full analytic gradient of spectral_loss, chained through the dependence of
/// the per-column mean and standard deviation on z.
Matrix spectral_grad(const Matrix& z, double eps);

/// Combined regularizer: losses, diagnostics, and the summed gradient
/// alpha_marg * marginal_grad + alpha_spec * spectral_grad. The global lambda
/// is NOT applied here; it belongs to the training objective.
std::pair<MerBreakdown, Matrix> mer_loss_grad(const Matrix& z, const MerConfig& cfg);

}  // namespace merdg
