#include "merdg/mlp.hpp"

#include <cmath>

namespace merdg {

Mlp init_mlp(const std::vector<std::size_t>& widths, SeededRng& rng) {
    if (widths.size() < 2) throw ContractError("init_mlp: need input and output widths");
    for (std::size_t w : widths) {
        if (w == 0) throw ContractError("init_mlp: zero-width layer");
    }
    Mlp net;
    net.widths = widths;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        Matrix w(fan_in, fan_out);
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.next_normal();
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

namespace {

Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    Matrix out = matmul(x, w);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* r = out.row(i);
        for (std::size_t j = 0; j < out.cols(); ++j) r[j] += b[j];
    }
    return out;
}

}  // namespace

Matrix mlp_forward(const Mlp& net, const Matrix& x) {
    if (x.cols() != net.input_dim()) throw ContractError("mlp_forward: input width mismatch");
    Matrix h = x;
    const std::size_t layers = net.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        h = affine(h, net.weights[l], net.biases[l]);
        if (l + 1 < layers) {
            for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::max(0.0, h.data()[i]);
        }
    }
    return h;
}

MlpTrace mlp_forward_trace(const Mlp& net, const Matrix& x) {
    if (x.cols() != net.input_dim()) throw ContractError("mlp_forward_trace: input width mismatch");
    MlpTrace trace;
    trace.activations.push_back(x);
    const std::size_t layers = net.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix pre = affine(trace.activations.back(), net.weights[l], net.biases[l]);
        Matrix act = pre;
        if (l + 1 < layers) {
            for (std::size_t i = 0; i < act.size(); ++i) act.data()[i] = std::max(0.0, act.data()[i]);
        }
        trace.preacts.push_back(std::move(pre));
        trace.activations.push_back(std::move(act));
    }
    return trace;
}

MlpGrads zero_grads(const Mlp& net) {
    MlpGrads g;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.weights.emplace_back(net.weights[l].rows(), net.weights[l].cols());
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
}

Matrix mlp_backward(const Mlp& net, const MlpTrace& trace, const Matrix& d_output,
                    MlpGrads& grads) {
    const std::size_t layers = net.weights.size();
    Matrix d = d_output;
    for (std::size_t l = layers; l-- > 0;) {
        if (l + 1 < layers) {
            // Rectifier: pass gradient only where the pre-activation was positive.
            const Matrix& pre = trace.preacts[l];
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (pre.data()[i] <= 0.0) d.data()[i] = 0.0;
            }
        }
        const Matrix& input = trace.activations[l];
        grads.weights[l] += matmul(input.transpose(), d);
        for (std::size_t j = 0; j < grads.biases[l].size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.rows(); ++i) s += d(i, j);
            grads.biases[l][j] += s;
        }
        if (l > 0) d = matmul(d, net.weights[l].transpose());
    }
    return matmul(d, net.weights[0].transpose());
}

}  // namespace merdg
