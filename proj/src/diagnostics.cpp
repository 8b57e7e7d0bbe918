#include "merdg/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "merdg/linalg.hpp"

namespace merdg {

namespace {

constexpr double kRankTolScale = 1e-12;
constexpr double kSpectrumFloorRatio = 1e-12;

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* src = x.row(idx[i]);
        std::copy(src, src + x.cols(), out.row(i));
    }
    return out;
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

double median_pairwise_distance(const Matrix& x) {
    const std::size_t n = x.rows();
    std::vector<double> dist;
    dist.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            const double* a = x.row(i);
            const double* b = x.row(j);
            for (std::size_t k = 0; k < x.cols(); ++k) {
                const double d = a[k] - b[k];
                s += d * d;
            }
            dist.push_back(std::sqrt(s));
        }
    }
    std::sort(dist.begin(), dist.end());
    const std::size_t m = dist.size();
    return (m % 2 == 1) ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
}

Matrix rbf_gram(const Matrix& x, double bandwidth) {
    const std::size_t n = x.rows();
    const double denom = 2.0 * bandwidth * bandwidth;
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            const double* a = x.row(i);
            const double* b = x.row(j);
            for (std::size_t c = 0; c < x.cols(); ++c) {
                const double d = a[c] - b[c];
                s += d * d;
            }
            const double v = std::exp(-s / denom);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

// H K H for symmetric K: subtract row and column means, add the grand mean.
Matrix double_center(const Matrix& k) {
    const std::size_t n = k.rows();
    std::vector<double> rowmean(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) rowmean[i] += k(i, j);
        total += rowmean[i];
        rowmean[i] /= static_cast<double>(n);
    }
    total /= static_cast<double>(n * n);
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = k(i, j) - rowmean[i] - rowmean[j] + total;
    return out;
}

void require_paired_rows(const Matrix& x, const Matrix& y, const char* op) {
    if (x.rows() != y.rows()) {
        throw ContractError(std::string(op) + ": row counts differ");
    }
    if (x.rows() < 3) {
        throw ContractError(std::string(op) + ": need at least 3 rows");
    }
}

}  // namespace

double rankme(const Matrix& z) {
    std::vector<double> sv = singular_values(z);
    const double tol = kRankTolScale * static_cast<double>(std::max(z.rows(), z.cols()));
    double total = 0.0;
    double top = 0.0;
    for (double s : sv) {
        total += s;
        top = std::max(top, s);
    }
    if (top <= tol) throw NumericError("rankme: all singular values below tolerance");
    double entropy = 0.0;
    for (double s : sv) {
        const double p = s / total;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    return std::exp(entropy);
}

std::vector<double> spectrum(const Matrix& z) {
    std::vector<double> sv = singular_values(z);
    if (sv.empty() || sv[0] <= 0.0) {
        throw NumericError("spectrum: largest singular value is zero");
    }
    std::vector<double> out(sv.size());
    const double floor_value = std::log(kSpectrumFloorRatio);
    for (std::size_t i = 0; i < sv.size(); ++i) {
        const double ratio = sv[i] / sv[0];
        out[i] = ratio <= kSpectrumFloorRatio ? floor_value : std::log(ratio);
    }
    out[0] = 0.0;
    return out;
}

double cka_linear(const Matrix& x, const Matrix& y) {
    require_paired_rows(x, y, "cka_linear");
    Matrix xc = center_columns(x);
    Matrix yc = center_columns(y);
    Matrix cross = matmul(yc.transpose(), xc);
    Matrix xx = matmul(xc.transpose(), xc);
    Matrix yy = matmul(yc.transpose(), yc);
    const double denom = xx.frobenius_norm() * yy.frobenius_norm();
    if (denom == 0.0) throw NumericError("cka_linear: constant features, zero denominator");
    const double num = cross.frobenius_norm();
    return num * num / denom;
}

double cka_rbf(const Matrix& x, const Matrix& y, std::optional<double> bandwidth) {
    require_paired_rows(x, y, "cka_rbf");
    const double bx = bandwidth ? *bandwidth : median_pairwise_distance(x);
    const double by = bandwidth ? *bandwidth : median_pairwise_distance(y);
    if (bx <= 0.0 || by <= 0.0) {
        throw NumericError("cka_rbf: zero bandwidth (identical rows)");
    }
    Matrix kx = double_center(rbf_gram(x, bx));
    Matrix ky = double_center(rbf_gram(y, by));
    const double denom = kx.frobenius_norm() * ky.frobenius_norm();
    if (denom == 0.0) throw NumericError("cka_rbf: degenerate centered kernel");
    return frobenius_inner(kx, ky) / denom;
}

double procrustes_similarity(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) throw ContractError("procrustes_similarity: row counts differ");
    const std::size_t d = std::max(x.cols(), y.cols());
    auto pad = [d](const Matrix& m) {
        if (m.cols() == d) return m;
        Matrix out(m.rows(), d);
        for (std::size_t i = 0; i < m.rows(); ++i)
            std::copy(m.row(i), m.row(i) + m.cols(), out.row(i));
        return out;
    };
    Matrix xc = center_columns(pad(x));
    Matrix yc = center_columns(pad(y));
    const double nx = xc.frobenius_norm();
    const double ny = yc.frobenius_norm();
    if (nx == 0.0 || ny == 0.0) {
        throw NumericError("procrustes_similarity: zero Frobenius norm after centering");
    }
    xc *= 1.0 / nx;
    yc *= 1.0 / ny;
    Matrix cross = matmul(xc.transpose(), yc);
    std::vector<double> sv = singular_values(cross);
    double nuclear = 0.0;
    for (double s : sv) nuclear += s;
    return nuclear;
}

std::string alignment_metric_name(AlignmentMetric m) {
    switch (m) {
        case AlignmentMetric::CkaLinear: return "cka-linear";
        case AlignmentMetric::CkaRbf: return "cka-rbf";
        case AlignmentMetric::Procrustes: return "procrustes";
    }
    throw ContractError("alignment_metric_name: unknown metric");
}

AlignmentMetric parse_alignment_metric(const std::string& name) {
    if (name == "cka-linear") return AlignmentMetric::CkaLinear;
    if (name == "cka-rbf") return AlignmentMetric::CkaRbf;
    if (name == "procrustes") return AlignmentMetric::Procrustes;
    throw ContractError("unknown alignment metric: " + name);
}

AlignmentReport class_conditional_alignment(const Matrix& x_src, const std::vector<int>& y_src,
                                            const Matrix& x_tgt, const std::vector<int>& y_tgt,
                                            AlignmentMetric metric, SeededRng& rng) {
    if (x_src.rows() != y_src.size() || x_tgt.rows() != y_tgt.size()) {
        throw ContractError("class_conditional_alignment: label count mismatch");
    }
    std::map<int, std::vector<std::size_t>> src_idx, tgt_idx;
    for (std::size_t i = 0; i < y_src.size(); ++i) src_idx[y_src[i]].push_back(i);
    for (std::size_t i = 0; i < y_tgt.size(); ++i) tgt_idx[y_tgt[i]].push_back(i);

    std::vector<int> classes;
    for (const auto& [c, v] : src_idx) classes.push_back(c);
    for (const auto& [c, v] : tgt_idx) {
        if (!src_idx.count(c)) classes.push_back(c);
    }
    std::sort(classes.begin(), classes.end());

    // Order-preserving seeded subsample of n items.
    auto subsample = [&rng](const std::vector<std::size_t>& pool, std::size_t n) {
        std::vector<std::size_t> work = pool;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(work.size() - i));
            std::swap(work[i], work[j]);
        }
        work.resize(n);
        std::sort(work.begin(), work.end());
        return work;
    };

    AlignmentReport report;
    report.metric_name = alignment_metric_name(metric);
    double total = 0.0;
    for (int c : classes) {
        auto si = src_idx.find(c);
        auto ti = tgt_idx.find(c);
        if (si == src_idx.end() || ti == tgt_idx.end()) {
            throw ContractError("class_conditional_alignment: class " + std::to_string(c) +
                                " missing on one side");
        }
        const std::size_t n_c = std::min(si->second.size(), ti->second.size());
        if (n_c < 3) {
            throw ContractError("class_conditional_alignment: class " + std::to_string(c) +
                                " has fewer than 3 samples on one side");
        }
        Matrix xs = take_rows(x_src, subsample(si->second, n_c));
        Matrix xt = take_rows(x_tgt, subsample(ti->second, n_c));
        double score = 0.0;
        switch (metric) {
            case AlignmentMetric::CkaLinear: score = cka_linear(xs, xt); break;
            case AlignmentMetric::CkaRbf: score = cka_rbf(xs, xt); break;
            case AlignmentMetric::Procrustes: score = procrustes_similarity(xs, xt); break;
        }
        report.per_class_scores[c] = score;
        total += score;
    }
    report.mean_score = total / static_cast<double>(classes.size());
    return report;
}

LinearProbe fit_linear_probe(const Matrix& x, const std::vector<int>& y, std::size_t num_classes,
                             int epochs, double lr) {
    if (x.rows() != y.size()) throw ContractError("fit_linear_probe: label count mismatch");
    if (x.rows() == 0) throw ContractError("fit_linear_probe: empty training set");
    const std::size_t n = x.rows(), d = x.cols(), k = num_classes;

    LinearProbe probe;
    probe.feat_mean.assign(d, 0.0);
    probe.feat_scale.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = x.row(i);
        for (std::size_t j = 0; j < d; ++j) probe.feat_mean[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) probe.feat_mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = x.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = r[j] - probe.feat_mean[j];
            probe.feat_scale[j] += dev * dev;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double var = probe.feat_scale[j] / std::max<double>(1.0, static_cast<double>(n - 1));
        probe.feat_scale[j] = 1.0 / std::sqrt(var + 1e-8);
    }

    Matrix xs(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = x.row(i);
        double* o = xs.row(i);
        for (std::size_t j = 0; j < d; ++j) o[j] = (r[j] - probe.feat_mean[j]) * probe.feat_scale[j];
    }

    probe.weights = Matrix(d, k);
    probe.bias.assign(k, 0.0);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        Matrix logits = matmul(xs, probe.weights);
        for (std::size_t i = 0; i < n; ++i) {
            double* row = logits.row(i);
            for (std::size_t c = 0; c < k; ++c) row[c] += probe.bias[c];
            double mx = row[0];
            for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, row[c]);
            double denom = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                row[c] = std::exp(row[c] - mx);
                denom += row[c];
            }
            for (std::size_t c = 0; c < k; ++c) row[c] /= denom;
            row[static_cast<std::size_t>(y[i])] -= 1.0;  // softmax - onehot
        }
        Matrix gw = matmul(xs.transpose(), logits);
        gw *= 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t c = 0; c < k; ++c) probe.weights(j, c) -= lr * gw(j, c);
        for (std::size_t c = 0; c < k; ++c) {
            double gb = 0.0;
            for (std::size_t i = 0; i < n; ++i) gb += logits(i, c);
            probe.bias[c] -= lr * gb / static_cast<double>(n);
        }
    }
    probe.weights.ensure_finite("fit_linear_probe");
    return probe;
}

std::vector<int> probe_predict(const LinearProbe& probe, const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols(), k = probe.bias.size();
    if (d != probe.weights.rows()) throw ContractError("probe_predict: feature width mismatch");
    std::vector<int> pred(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = x.row(i);
        double best = -1e300;
        int arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
            double v = probe.bias[c];
            for (std::size_t j = 0; j < d; ++j) {
                v += (r[j] - probe.feat_mean[j]) * probe.feat_scale[j] * probe.weights(j, c);
            }
            if (v > best) {
                best = v;
                arg = static_cast<int>(c);
            }
        }
        pred[i] = arg;
    }
    return pred;
}

double probe_accuracy(const LinearProbe& probe, const Matrix& x, const std::vector<int>& y) {
    if (x.rows() != y.size()) throw ContractError("probe_accuracy: label count mismatch");
    if (y.empty()) throw ContractError("probe_accuracy: empty evaluation set");
    std::vector<int> pred = probe_predict(probe, x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

ProbeResult domain_probe(const std::vector<Matrix>& features_per_domain, SeededRng& rng,
                         int epochs, double lr) {
    const std::size_t s = features_per_domain.size();
    if (s < 2) throw ContractError("domain_probe: need at least 2 domains");
    const std::size_t d = features_per_domain[0].cols();
    for (const Matrix& f : features_per_domain) {
        if (f.rows() < 10) throw ContractError("domain_probe: each domain needs >= 10 samples");
        if (f.cols() != d) throw ContractError("domain_probe: feature width mismatch across domains");
    }

    // Stratified 80/20: split each domain separately with the shared rng.
    std::vector<std::vector<std::size_t>> train_idx(s), test_idx(s);
    for (std::size_t dom = 0; dom < s; ++dom) {
        const std::size_t n = features_per_domain[dom].rows();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle(idx, rng);
        const std::size_t n_train = (n * 4) / 5;
        train_idx[dom].assign(idx.begin(), idx.begin() + n_train);
        test_idx[dom].assign(idx.begin() + n_train, idx.end());
    }

    std::size_t total_train = 0;
    for (const auto& v : train_idx) total_train += v.size();
    Matrix x_train(total_train, d);
    std::vector<int> y_train(total_train);
    std::size_t at = 0;
    for (std::size_t dom = 0; dom < s; ++dom) {
        for (std::size_t i : train_idx[dom]) {
            std::copy(features_per_domain[dom].row(i), features_per_domain[dom].row(i) + d,
                      x_train.row(at));
            y_train[at++] = static_cast<int>(dom);
        }
    }

    LinearProbe probe = fit_linear_probe(x_train, y_train, s, epochs, lr);

    ProbeResult result;
    result.num_domains = s;
    result.confusion.assign(s, std::vector<std::size_t>(s, 0));
    std::size_t hits = 0, total = 0;
    for (std::size_t dom = 0; dom < s; ++dom) {
        Matrix x_test = take_rows(features_per_domain[dom], test_idx[dom]);
        std::vector<int> pred = probe_predict(probe, x_test);
        for (int p : pred) {
            result.confusion[dom][static_cast<std::size_t>(p)]++;
            hits += static_cast<std::size_t>(p) == dom ? 1 : 0;
            ++total;
        }
    }
    result.accuracy = static_cast<double>(hits) / static_cast<double>(total);
    return result;
}

}  // namespace merdg
