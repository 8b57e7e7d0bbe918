#include "merdg/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace merdg {

namespace {

void check_batch(const FusionModel& model, const std::vector<Matrix>& batch) {
    if (batch.size() != model.num_modalities()) {
        throw ContractError("forward: batch modality count mismatch");
    }
    for (std::size_t m = 0; m < batch.size(); ++m) {
        if (batch[m].rows() != batch[0].rows()) {
            throw ContractError("forward: batch row counts differ across modalities");
        }
        if (batch[m].cols() != model.encoders[m].input_dim()) {
            throw ContractError("forward: input width mismatch for modality " + std::to_string(m));
        }
    }
}

Matrix concat_columns(const std::vector<Matrix>& parts) {
    const std::size_t n = parts[0].rows();
    std::size_t width = 0;
    for (const Matrix& p : parts) width += p.cols();
    Matrix out(n, width);
    std::size_t at = 0;
    for (const Matrix& p : parts) {
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(p.row(i), p.row(i) + p.cols(), out.row(i) + at);
        }
        at += p.cols();
    }
    return out;
}

// Row softmax in place; returns mean cross-entropy against the targets.
double softmax_cross_entropy(Matrix& logits, const std::vector<int>& labels,
                             double label_smoothing) {
    const std::size_t n = logits.rows(), k = logits.cols();
    const double off = label_smoothing / static_cast<double>(k);
    double ce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double* r = logits.row(i);
        double mx = r[0];
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, r[c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            r[c] = std::exp(r[c] - mx);
            denom += r[c];
        }
        for (std::size_t c = 0; c < k; ++c) r[c] /= denom;
        const auto y = static_cast<std::size_t>(labels[i]);
        if (label_smoothing == 0.0) {
            ce -= std::log(r[y]);
        } else {
            for (std::size_t c = 0; c < k; ++c) {
                const double q = (c == y ? 1.0 - label_smoothing + off : off);
                ce -= q * std::log(r[c]);
            }
        }
    }
    return ce / static_cast<double>(n);
}

}  // namespace

FusionModel init_model(const ModelDims& dims, std::uint64_t seed) {
    if (dims.input_dims.empty()) throw ContractError("init_model: need at least one modality");
    if (dims.num_classes < 2) throw ContractError("init_model: need at least two classes");
    if (dims.encoder_out == 0) throw ContractError("init_model: zero encoder output width");
    SeededRng rng(seed);
    FusionModel model;
    model.num_classes = dims.num_classes;
    for (std::size_t d : dims.input_dims) {
        std::vector<std::size_t> widths;
        widths.push_back(d);
        for (std::size_t h : dims.hidden) widths.push_back(h);
        widths.push_back(dims.encoder_out);
        model.encoders.push_back(init_mlp(widths, rng));
    }
    const std::size_t fused = dims.encoder_out * dims.input_dims.size();
    const double scale = std::sqrt(2.0 / static_cast<double>(fused));
    model.classifier_w = Matrix(fused, dims.num_classes);
    for (std::size_t i = 0; i < model.classifier_w.size(); ++i) {
        model.classifier_w.data()[i] = scale * rng.next_normal();
    }
    model.classifier_b.assign(dims.num_classes, 0.0);
    return model;
}

ForwardResult forward(const FusionModel& model, const std::vector<Matrix>& batch) {
    check_batch(model, batch);
    ForwardResult out;
    for (std::size_t m = 0; m < batch.size(); ++m) {
        out.encoder_outputs.push_back(mlp_forward(model.encoders[m], batch[m]));
    }
    out.logits = classify_features(model, out.encoder_outputs);
    return out;
}

Matrix classify_features(const FusionModel& model, const std::vector<Matrix>& encoder_outputs) {
    Matrix fused = concat_columns(encoder_outputs);
    if (fused.cols() != model.classifier_w.rows()) {
        throw ContractError("classify_features: fused width mismatch");
    }
    Matrix logits = matmul(fused, model.classifier_w);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double* r = logits.row(i);
        for (std::size_t j = 0; j < logits.cols(); ++j) r[j] += model.classifier_b[j];
    }
    return logits;
}

double accuracy(const FusionModel& model, const std::vector<Matrix>& inputs,
                const std::vector<int>& labels) {
    if (inputs.empty() || inputs[0].rows() != labels.size()) {
        throw ContractError("accuracy: label count mismatch");
    }
    Matrix logits = forward(model, inputs).logits;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* r = logits.row(i);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            if (r[c] > r[arg]) arg = c;
        }
        hits += static_cast<int>(arg) == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

BaselineReg parse_baseline_reg(const std::string& name) {
    if (name == "none") return BaselineReg::None;
    if (name == "dropout") return BaselineReg::Dropout;
    if (name == "feature_noise") return BaselineReg::FeatureNoise;
    if (name == "weight_decay") return BaselineReg::WeightDecay;
    if (name == "label_smoothing") return BaselineReg::LabelSmoothing;
    throw ContractError("unknown baseline regularizer: " + name);
}

std::string baseline_reg_name(BaselineReg reg) {
    switch (reg) {
        case BaselineReg::None: return "none";
        case BaselineReg::Dropout: return "dropout";
        case BaselineReg::FeatureNoise: return "feature_noise";
        case BaselineReg::WeightDecay: return "weight_decay";
        case BaselineReg::LabelSmoothing: return "label_smoothing";
    }
    throw ContractError("baseline_reg_name: unknown value");
}

RegDraw draw_reg_noise(const RegSettings& reg, const std::vector<std::size_t>& rows_by_modality,
                       std::size_t encoder_out, SeededRng& rng) {
    RegDraw draw;
    if (reg.baseline == BaselineReg::Dropout && reg.baseline_param > 0.0) {
        const double p = reg.baseline_param;
        if (p >= 1.0) throw ContractError("dropout rate must be < 1");
        const double keep_scale = 1.0 / (1.0 - p);
        for (std::size_t rows : rows_by_modality) {
            Matrix mask(rows, encoder_out);
            for (std::size_t i = 0; i < mask.size(); ++i) {
                mask.data()[i] = rng.next_real() < p ? 0.0 : keep_scale;
            }
            draw.dropout_masks.push_back(std::move(mask));
        }
    } else if (reg.baseline == BaselineReg::FeatureNoise && reg.baseline_param > 0.0) {
        for (std::size_t rows : rows_by_modality) {
            Matrix noise = gaussian_matrix(rng, rows, encoder_out);
            noise *= reg.baseline_param;
            draw.feature_noise.push_back(std::move(noise));
        }
    }
    return draw;
}

LossBreakdown loss_and_grads(const FusionModel& model, const std::vector<Matrix>& batch,
                             const std::vector<int>& labels, const RegSettings& reg,
                             const RegDraw& draw, ModelGrads* grads) {
    check_batch(model, batch);
    const std::size_t n = batch[0].rows();
    if (labels.size() != n) throw ContractError("loss_and_grads: label count mismatch");
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= model.num_classes) {
            throw ContractError("loss_and_grads: label out of range");
        }
    }
    if (reg.mer) reg.mer->validate();

    const std::size_t m_count = model.num_modalities();
    std::vector<MlpTrace> traces;
    std::vector<Matrix> clean_z;
    traces.reserve(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        traces.push_back(mlp_forward_trace(model.encoders[m], batch[m]));
        clean_z.push_back(traces.back().activations.back());
    }

    // Dropout / feature noise perturb what fusion sees, not what the entropy
    // regularizer sees.
    std::vector<Matrix> fused_view = clean_z;
    if (!draw.dropout_masks.empty()) {
        for (std::size_t m = 0; m < m_count; ++m) {
            for (std::size_t i = 0; i < fused_view[m].size(); ++i) {
                fused_view[m].data()[i] *= draw.dropout_masks[m].data()[i];
            }
        }
    }
    if (!draw.feature_noise.empty()) {
        for (std::size_t m = 0; m < m_count; ++m) fused_view[m] += draw.feature_noise[m];
    }

    Matrix probs = classify_features(model, fused_view);
    const double smoothing =
        reg.baseline == BaselineReg::LabelSmoothing ? reg.baseline_param : 0.0;

    LossBreakdown out;
    out.ce = softmax_cross_entropy(probs, labels, smoothing);
    out.total = out.ce;

    const double lambda = reg.mer ? reg.mer->lambda : 0.0;
    std::vector<Matrix> mer_grads;
    if (reg.mer) {
        for (std::size_t m = 0; m < m_count; ++m) {
            auto [breakdown, grad] = mer_loss_grad(clean_z[m], *reg.mer);
            out.mer_marg_sum += breakdown.marginal_loss;
            out.mer_spec_sum += breakdown.spectral_loss;
            out.total += lambda * breakdown.combined;
            out.mer_per_modality.push_back(std::move(breakdown));
            mer_grads.push_back(std::move(grad));
        }
    }

    double wd = 0.0;
    if (reg.baseline == BaselineReg::WeightDecay && reg.baseline_param > 0.0) {
        wd = reg.baseline_param;
        double sq = 0.0;
        for (const Mlp& enc : model.encoders) {
            for (const Matrix& w : enc.weights) {
                for (std::size_t i = 0; i < w.size(); ++i) sq += w.data()[i] * w.data()[i];
            }
        }
        for (std::size_t i = 0; i < model.classifier_w.size(); ++i) {
            sq += model.classifier_w.data()[i] * model.classifier_w.data()[i];
        }
        out.total += 0.5 * wd * sq;
    }

    if (grads == nullptr) return out;

    // d(mean CE)/d(logits) = (softmax - target) / N; probs currently holds the
    // softmax rows minus nothing, so subtract the (smoothed) targets in place.
    const std::size_t k = model.num_classes;
    const double off = smoothing / static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i) {
        double* r = probs.row(i);
        const auto y = static_cast<std::size_t>(labels[i]);
        if (smoothing == 0.0) {
            r[y] -= 1.0;
        } else {
            for (std::size_t c = 0; c < k; ++c) r[c] -= (c == y ? 1.0 - smoothing + off : off);
        }
        for (std::size_t c = 0; c < k; ++c) r[c] /= static_cast<double>(n);
    }

    Matrix fused = concat_columns(fused_view);
    grads->classifier_w += matmul(fused.transpose(), probs);
    for (std::size_t c = 0; c < k; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += probs(i, c);
        grads->classifier_b[c] += s;
    }

    Matrix d_fused = matmul(probs, model.classifier_w.transpose());
    std::size_t at = 0;
    for (std::size_t m = 0; m < m_count; ++m) {
        const std::size_t width = clean_z[m].cols();
        Matrix dz(n, width);
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(d_fused.row(i) + at, d_fused.row(i) + at + width, dz.row(i));
        }
        at += width;
        if (!draw.dropout_masks.empty()) {
            for (std::size_t i = 0; i < dz.size(); ++i) {
                dz.data()[i] *= draw.dropout_masks[m].data()[i];
            }
        }
        if (reg.mer) {
            for (std::size_t i = 0; i < dz.size(); ++i) {
                dz.data()[i] += lambda * mer_grads[m].data()[i];
            }
        }
        mlp_backward(model.encoders[m], traces[m], dz, grads->encoders[m]);
    }

    if (wd > 0.0) {
        for (std::size_t m = 0; m < m_count; ++m) {
            for (std::size_t l = 0; l < model.encoders[m].weights.size(); ++l) {
                const Matrix& w = model.encoders[m].weights[l];
                Matrix& g = grads->encoders[m].weights[l];
                for (std::size_t i = 0; i < w.size(); ++i) g.data()[i] += wd * w.data()[i];
            }
        }
        for (std::size_t i = 0; i < model.classifier_w.size(); ++i) {
            grads->classifier_w.data()[i] += wd * model.classifier_w.data()[i];
        }
    }
    return out;
}

ModelGrads zero_grads(const FusionModel& model) {
    ModelGrads g;
    for (const Mlp& enc : model.encoders) g.encoders.push_back(zero_grads(enc));
    g.classifier_w = Matrix(model.classifier_w.rows(), model.classifier_w.cols());
    g.classifier_b.assign(model.classifier_b.size(), 0.0);
    return g;
}

Corruption parse_corruption(const std::string& token, std::size_t num_modalities) {
    auto modality_from = [num_modalities](const std::string& name) {
        if (name.size() < 2 || name[0] != 'm') {
            throw ContractError("unknown modality name: " + name);
        }
        std::size_t idx = 0;
        for (std::size_t i = 1; i < name.size(); ++i) {
            if (name[i] < '0' || name[i] > '9') throw ContractError("unknown modality name: " + name);
            idx = idx * 10 + static_cast<std::size_t>(name[i] - '0');
        }
        if (idx >= num_modalities) throw ContractError("unknown modality name: " + name);
        return idx;
    };
    const auto first = token.find(':');
    const std::string kind = first == std::string::npos ? token : token.substr(0, first);
    if (kind == "noise") {
        const auto second = token.find(':', first + 1);
        if (first == std::string::npos || second == std::string::npos) {
            throw ContractError("noise corruption needs noise:<modality>:<sigma>");
        }
        Corruption c;
        c.kind = Corruption::Kind::Noise;
        c.modality = modality_from(token.substr(first + 1, second - first - 1));
        try {
            c.sigma = std::stod(token.substr(second + 1));
        } catch (const std::exception&) {
            throw ContractError("bad sigma in corruption: " + token);
        }
        if (c.sigma < 0.0) throw ContractError("sigma must be >= 0 in corruption: " + token);
        return c;
    }
    if (kind == "drop") {
        if (first == std::string::npos) throw ContractError("drop corruption needs drop:<modality>");
        Corruption c;
        c.kind = Corruption::Kind::Drop;
        c.modality = modality_from(token.substr(first + 1));
        return c;
    }
    throw ContractError("unknown corruption: " + token);
}

std::string corruption_name(const Corruption& c) {
    if (c.kind == Corruption::Kind::Drop) {
        return "drop:m" + std::to_string(c.modality);
    }
    std::string sigma = std::to_string(c.sigma);
    sigma.erase(sigma.find_last_not_of('0') + 1);
    if (!sigma.empty() && sigma.back() == '.') sigma.pop_back();
    return "noise:m" + std::to_string(c.modality) + ":" + sigma;
}

double corrupted_evaluate(const FusionModel& model, const std::vector<Matrix>& inputs,
                          const std::vector<int>& labels, const Corruption& corruption,
                          SeededRng& rng) {
    check_batch(model, inputs);
    if (inputs[0].rows() != labels.size()) throw ContractError("corrupted_evaluate: label mismatch");
    if (corruption.modality >= model.num_modalities()) {
        throw ContractError("corrupted_evaluate: unknown modality index " +
                            std::to_string(corruption.modality));
    }
    std::vector<Matrix> z;
    for (std::size_t m = 0; m < inputs.size(); ++m) {
        z.push_back(mlp_forward(model.encoders[m], inputs[m]));
    }
    Matrix& target = z[corruption.modality];
    if (corruption.kind == Corruption::Kind::Drop) {
        target = Matrix(target.rows(), target.cols());
    } else if (corruption.sigma > 0.0) {
        Matrix noise = gaussian_matrix(rng, target.rows(), target.cols());
        noise *= corruption.sigma;
        target += noise;
    }
    Matrix logits = classify_features(model, z);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* r = logits.row(i);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            if (r[c] > r[arg]) arg = c;
        }
        hits += static_cast<int>(arg) == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

AdamState make_adam_state(const FusionModel& model) {
    AdamState st;
    for (const Mlp& enc : model.encoders) {
        st.encoder_m.push_back(zero_grads(enc));
        st.encoder_v.push_back(zero_grads(enc));
    }
    st.classifier_w_m = Matrix(model.classifier_w.rows(), model.classifier_w.cols());
    st.classifier_w_v = st.classifier_w_m;
    st.classifier_b_m.assign(model.classifier_b.size(), 0.0);
    st.classifier_b_v.assign(model.classifier_b.size(), 0.0);
    return st;
}

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_update(double* param, const double* grad, double* m, double* v, std::size_t count,
                 double lr, double bc1, double bc2) {
    for (std::size_t i = 0; i < count; ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

}  // namespace

void adam_step(FusionModel& model, const ModelGrads& grads, AdamState& state, double lr) {
    if (grads.encoders.size() != model.encoders.size()) {
        throw ContractError("adam_step: gradient/model shape mismatch");
    }
    if (!grads.classifier_w.same_shape(model.classifier_w) ||
        grads.classifier_b.size() != model.classifier_b.size()) {
        throw ContractError("adam_step: classifier shape mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
    for (std::size_t e = 0; e < model.encoders.size(); ++e) {
        Mlp& enc = model.encoders[e];
        if (grads.encoders[e].weights.size() != enc.weights.size()) {
            throw ContractError("adam_step: gradient/model layer mismatch");
        }
        for (std::size_t l = 0; l < enc.weights.size(); ++l) {
            if (!grads.encoders[e].weights[l].same_shape(enc.weights[l])) {
                throw ContractError("adam_step: weight shape mismatch");
            }
            adam_update(enc.weights[l].data(), grads.encoders[e].weights[l].data(),
                        state.encoder_m[e].weights[l].data(), state.encoder_v[e].weights[l].data(),
                        enc.weights[l].size(), lr, bc1, bc2);
            adam_update(enc.biases[l].data(), grads.encoders[e].biases[l].data(),
                        state.encoder_m[e].biases[l].data(), state.encoder_v[e].biases[l].data(),
                        enc.biases[l].size(), lr, bc1, bc2);
            enc.weights[l].ensure_finite("adam_step");
        }
    }
    adam_update(model.classifier_w.data(), grads.classifier_w.data(), state.classifier_w_m.data(),
                state.classifier_w_v.data(), model.classifier_w.size(), lr, bc1, bc2);
    adam_update(model.classifier_b.data(), grads.classifier_b.data(), state.classifier_b_m.data(),
                state.classifier_b_v.data(), model.classifier_b.size(), lr, bc1, bc2);
    model.classifier_w.ensure_finite("adam_step");
}

}  // namespace merdg
