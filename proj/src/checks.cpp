#include "merdg/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "merdg/fusion.hpp"
#include "merdg/io.hpp"
#include "merdg/mer.hpp"
#include "merdg/rng.hpp"

namespace merdg {

namespace {

Matrix central_differences(const std::function<double(const Matrix&)>& f, Matrix z, double step) {
    Matrix grad(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double orig = z.data()[i];
        z.data()[i] = orig + step;
        const double up = f(z);
        z.data()[i] = orig - step;
        const double down = f(z);
        z.data()[i] = orig;
        grad.data()[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double rel_error(const Matrix& analytic, const Matrix& fd) {
    return frobenius_distance(analytic, fd) / std::max(fd.frobenius_norm(), 1e-12);
}

double median_ms(std::vector<double>& samples) {
    std::sort(samples.begin(), samples.end());
    const std::size_t m = samples.size();
    return (m % 2 == 1) ? samples[m / 2] : 0.5 * (samples[m / 2 - 1] + samples[m / 2]);
}

volatile double g_bench_sink = 0.0;  // defeats dead-code elimination in timed loops

template <typename F>
double time_ms(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count();
}

}  // namespace

GradCheckReport run_grad_check(std::size_t n, std::size_t d, std::size_t seeds, double step) {
    if (seeds < 1) throw ContractError("grad check: need >= 1 seed");
    if (n < 2) throw ContractError("grad check: need n >= 2");
    if (d < 1) throw ContractError("grad check: need d >= 1");
    if (!(step > 0.0)) throw ContractError("grad check: step must be > 0");

    const MerConfig cfg;  // defaults
    constexpr double kTol = 1e-5;

    struct Case {
        const char* name;
        double worst = 0.0;
        std::uint64_t worst_seed = 0;
    };
    Case cases[3] = {{"marginal"}, {"spectral"}, {"combined"}};

    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        SeededRng rng(seed);
        Matrix z = gaussian_matrix(rng, n, d);

        const Matrix marg = marginal_grad(z, cfg.gamma, cfg.eps);
        const Matrix marg_fd = central_differences(
            [&cfg](const Matrix& m) { return marginal_loss(m, cfg.gamma, cfg.eps).loss; }, z, step);
        const double e0 = rel_error(marg, marg_fd);
        if (e0 > cases[0].worst) {
            cases[0].worst = e0;
            cases[0].worst_seed = seed;
        }

        const Matrix spec = spectral_grad(z, cfg.eps);
        const Matrix spec_fd = central_differences(
            [&cfg](const Matrix& m) { return spectral_loss(m, cfg.eps).loss; }, z, step);
        const double e1 = rel_error(spec, spec_fd);
        if (e1 > cases[1].worst) {
            cases[1].worst = e1;
            cases[1].worst_seed = seed;
        }

        const Matrix combined = mer_loss_grad(z, cfg).second;
        const Matrix combined_fd = central_differences(
            [&cfg](const Matrix& m) { return mer_loss_grad(m, cfg).first.combined; }, z, step);
        const double e2 = rel_error(combined, combined_fd);
        if (e2 > cases[2].worst) {
            cases[2].worst = e2;
            cases[2].worst_seed = seed;
        }
    }

    GradCheckReport report;
    report.pass = true;
    for (const Case& c : cases) {
        if (c.worst >= report.worst_rel_err) {
            report.worst_rel_err = c.worst;
            report.worst_case = std::string(c.name) + " seed=" + std::to_string(c.worst_seed);
        }
        if (c.worst >= kTol) report.pass = false;
        report.text += std::string(c.name) + ": worst_rel_err = " + format_double(c.worst, 6) +
                       " (seed " + std::to_string(c.worst_seed) + ")\n";
    }
    report.text += std::string("grad check ") + (report.pass ? "PASS" : "FAIL") +
                   ": worst " + report.worst_case + " rel_err = " +
                   format_double(report.worst_rel_err, 6) + " (tolerance 1e-05)\n";
    return report;
}

std::vector<BenchRow> run_bench(std::size_t n, const std::vector<std::size_t>& d_list, int reps) {
    if (d_list.empty()) throw ContractError("bench: need at least one dimension");
    if (reps < 1) throw ContractError("bench: need >= 1 repetition");
    const MerConfig cfg;

    std::vector<BenchRow> rows;
    for (std::size_t d : d_list) {
        SeededRng rng(d);
        Matrix z = gaussian_matrix(rng, n, d);

        std::vector<double> mer_samples;
        for (int r = 0; r < reps; ++r) {
            mer_samples.push_back(time_ms([&] {
                auto [bd, grad] = mer_loss_grad(z, cfg);
                g_bench_sink = g_bench_sink + bd.combined + grad(0, 0);
            }));
        }

        // Two-modality toy net whose encoders emit width-d features, so the
        // regularizer cost is compared against the network it regularizes.
        ModelDims dims;
        dims.input_dims = {64, 64};
        dims.hidden = {64};
        dims.encoder_out = d;
        dims.num_classes = 4;
        FusionModel model = init_model(dims, 1);
        std::vector<Matrix> batch = {gaussian_matrix(rng, n, 64), gaussian_matrix(rng, n, 64)};
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 4);
        RegSettings plain;
        std::vector<double> toy_samples;
        for (int r = 0; r < reps; ++r) {
            toy_samples.push_back(time_ms([&] {
                ModelGrads grads = zero_grads(model);
                LossBreakdown lb = loss_and_grads(model, batch, labels, plain, RegDraw{}, &grads);
                g_bench_sink = g_bench_sink + lb.total;
            }));
        }

        BenchRow row;
        row.d = d;
        row.mer_ms = median_ms(mer_samples);
        row.toy_ms = median_ms(toy_samples);
        row.overhead = row.toy_ms > 0.0 ? row.mer_ms / row.toy_ms : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace merdg
