#pragma once

#include <optional>
#include <vector>

#include "merdg/mer.hpp"
#include "merdg/mlp.hpp"

namespace merdg {

struct ModelDims {
    std::vector<std::size_t> input_dims;  // one per modality
    std::vector<std::size_t> hidden;      // hidden widths shared by every encoder
    std::size_t encoder_out = 16;
    std::size_t num_classes = 2;
};

/// Per-modality encoders, late fusion by concatenation, one linear classifier.
struct FusionModel {
    std::vector<Mlp> encoders;
    Matrix classifier_w;  // (sum of encoder outputs) x num_classes
    std::vector<double> classifier_b;
    std::size_t num_classes = 0;

    std::size_t num_modalities() const { return encoders.size(); }
    std::size_t fused_dim() const { return classifier_w.rows(); }
};

FusionModel init_model(const ModelDims& dims, std::uint64_t seed);

struct ForwardResult {
    std::vector<Matrix> encoder_outputs;
    Matrix logits;
};

ForwardResult forward(const FusionModel& model, const std::vector<Matrix>& batch);

/// Logits from already-computed (possibly corrupted) encoder outputs.
Matrix classify_features(const FusionModel& model, const std::vector<Matrix>& encoder_outputs);

double accuracy(const FusionModel& model, const std::vector<Matrix>& inputs,
                const std::vector<int>& labels);

enum class BaselineReg { None, Dropout, FeatureNoise, WeightDecay, LabelSmoothing };

BaselineReg parse_baseline_reg(const std::string& name);
std::string baseline_reg_name(BaselineReg reg);

/// Resolved regularization settings for one objective evaluation.
struct RegSettings {
    std::optional<MerConfig> mer;
    BaselineReg baseline = BaselineReg::None;
    double baseline_param = 0.0;
};

/// Stochastic draws (dropout masks / feature noise) for one batch. Empty for
/// deterministic evaluation. Dropout and noise act on encoder outputs before
/// fusion; the entropy regularizer always sees the clean encoder outputs.
struct RegDraw {
    std::vector<Matrix> dropout_masks;  // per modality, entries 0 or 1/(1-p)
    std::vector<Matrix> feature_noise;  // per modality, additive
};

RegDraw draw_reg_noise(const RegSettings& reg, const std::vector<std::size_t>& rows_by_modality,
                       std::size_t encoder_out, SeededRng& rng);

struct ModelGrads {
    std::vector<MlpGrads> encoders;
    Matrix classifier_w;
    std::vector<double> classifier_b;
};

ModelGrads zero_grads(const FusionModel& model);

struct LossBreakdown {
    double ce = 0.0;
    double total = 0.0;
    std::vector<MerBreakdown> mer_per_modality;
    double mer_marg_sum = 0.0;  // raw marginal losses summed over modalities
    double mer_spec_sum = 0.0;  // raw spectral losses summed over modalities
};

/// Cross-entropy plus the lambda-weighted per-modality entropy regularizer and
/// any baseline penalty. When grads is non-null, backpropagation fills it; the
/// regularizer gradient enters each encoder's backward pass at its output.
LossBreakdown loss_and_grads(const FusionModel& model, const std::vector<Matrix>& batch,
                             const std::vector<int>& labels, const RegSettings& reg,
                             const RegDraw& draw, ModelGrads* grads);

struct Corruption {
    enum class Kind { Noise, Drop };
    Kind kind = Kind::Noise;
    std::size_t modality = 0;
    double sigma = 0.0;
};

Corruption parse_corruption(const std::string& token, std::size_t num_modalities);
std::string corruption_name(const Corruption& c);

/// Applies the corruption to the named encoder's output before fusion and
/// evaluates the full fused pipeline. Noise draws come from the given rng.
double corrupted_evaluate(const FusionModel& model, const std::vector<Matrix>& inputs,
                          const std::vector<int>& labels, const Corruption& corruption,
                          SeededRng& rng);

/// Bias-corrected Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
    std::vector<MlpGrads> encoder_m, encoder_v;
    Matrix classifier_w_m, classifier_w_v;
    std::vector<double> classifier_b_m, classifier_b_v;
    long step = 0;
};

AdamState make_adam_state(const FusionModel& model);
void adam_step(FusionModel& model, const ModelGrads& grads, AdamState& state, double lr);

}  // namespace merdg
