#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "merdg/matrix.hpp"
#include "merdg/rng.hpp"

namespace merdg {

/// Effective rank: exp of the Shannon entropy of the normalized singular value
/// distribution. Throws NumericError when every singular value is below
/// 1e-12 * max(rows, cols).
double rankme(const Matrix& z);

/// Log-normalized singular values ln(sigma_i / sigma_1), descending, first
/// entry 0; ratios at or below 1e-12 are floored to ln(1e-12).
std::vector<double> spectrum(const Matrix& z);

/// Linear centered kernel alignment between two same-row-count feature sets.
double cka_linear(const Matrix& x, const Matrix& y);

/// CKA on double-centered RBF Gram matrices. The bandwidth defaults to each
/// input's median pairwise Euclidean distance; pass a value to fix it for both.
double cka_rbf(const Matrix& x, const Matrix& y,
               std::optional<double> bandwidth = std::nullopt);

/// Orthogonal-alignment similarity: nuclear norm of X^T Y after centering and
/// unit-Frobenius scaling. The narrower input is padded with zero columns.
double procrustes_similarity(const Matrix& x, const Matrix& y);

enum class AlignmentMetric { CkaLinear, CkaRbf, Procrustes };

std::string alignment_metric_name(AlignmentMetric m);
AlignmentMetric parse_alignment_metric(const std::string& name);

struct AlignmentReport {
    std::string metric_name;
    std::map<int, double> per_class_scores;
    double mean_score = 0.0;
};

/// Per-class alignment between source and target features: both sides are
/// subsampled (seeded, order-preserving) to the smaller class count, scored
/// with the metric, and averaged across classes.
AlignmentReport class_conditional_alignment(const Matrix& x_src, const std::vector<int>& y_src,
                                            const Matrix& x_tgt, const std::vector<int>& y_tgt,
                                            AlignmentMetric metric, SeededRng& rng);

struct ProbeResult {
    double accuracy = 0.0;
    std::size_t num_domains = 0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Multinomial logistic probe predicting domain identity from frozen features:
/// seeded 80/20 per-domain split, full-batch gradient descent on standardized
/// features, test accuracy plus the confusion matrix.
ProbeResult domain_probe(const std::vector<Matrix>& features_per_domain, SeededRng& rng,
                         int epochs = 200, double lr = 0.1);

/// Linear softmax classifier used by the probes. Features are standardized
/// with the training statistics captured at fit time.
struct LinearProbe {
    Matrix weights;  // D x K
    std::vector<double> bias;
    std::vector<double> feat_mean;
    std::vector<double> feat_scale;
};

LinearProbe fit_linear_probe(const Matrix& x, const std::vector<int>& y, std::size_t num_classes,
                             int epochs, double lr);
std::vector<int> probe_predict(const LinearProbe& probe, const Matrix& x);
double probe_accuracy(const LinearProbe& probe, const Matrix& x, const std::vector<int>& y);

}  // namespace merdg
