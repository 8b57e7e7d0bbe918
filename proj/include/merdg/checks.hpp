#pragma once

#include <string>
#include <vector>

#include "merdg/matrix.hpp"

namespace merdg {

struct GradCheckReport {
    bool pass = false;
    double worst_rel_err = 0.0;
    std::string worst_case;  // e.g. "spectral seed=13"
    std::string text;        // printable report, one line per loss
};

/// Central-difference verification of the analytic regularizer gradients on
/// seeded Gaussian batches. Passes when every relative Frobenius error stays
/// below 1e-5.
GradCheckReport run_grad_check(std::size_t n, std::size_t d, std::size_t seeds, double step);

struct BenchRow {
    std::size_t d = 0;
    double mer_ms = 0.0;  // regularizer loss + gradient, median wall time
    double toy_ms = 0.0;  // two-modality toy net forward + backward, median
    double overhead = 0.0;  // mer_ms / toy_ms
};

std::vector<BenchRow> run_bench(std::size_t n, const std::vector<std::size_t>& d_list, int reps);

}  // namespace merdg
