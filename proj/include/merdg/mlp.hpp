#pragma once

#include <vector>

#include "merdg/matrix.hpp"
#include "merdg/rng.hpp"

namespace merdg {

/// Fully connected net: rectifier on hidden layers, identity on the output.
/// weights[l] has shape widths[l] x widths[l+1]; biases[l] has widths[l+1].
struct Mlp {
    std::vector<std::size_t> widths;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }
};

/// Gaussian fan-in initialization, scale sqrt(2 / fan_in), zero biases.
Mlp init_mlp(const std::vector<std::size_t>& widths, SeededRng& rng);

Matrix mlp_forward(const Mlp& net, const Matrix& x);

struct MlpTrace {
    std::vector<Matrix> activations;  // activations[0] is the input batch
    std::vector<Matrix> preacts;
};

MlpTrace mlp_forward_trace(const Mlp& net, const Matrix& x);

struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

MlpGrads zero_grads(const Mlp& net);

/// Backpropagates d_output through the traced forward pass, accumulating into
/// grads; returns the gradient with respect to the input batch.
Matrix mlp_backward(const Mlp& net, const MlpTrace& trace, const Matrix& d_output,
                    MlpGrads& grads);

}  // namespace merdg
