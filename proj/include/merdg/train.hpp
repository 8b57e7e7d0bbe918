#pragma once

#include <optional>

#include "merdg/fusion.hpp"
#include "merdg/synth.hpp"

namespace merdg {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 48;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    std::optional<MerConfig> mer;  // absent disables the entropy regularizer
    BaselineReg baseline = BaselineReg::None;
    double baseline_param = 0.0;
    double val_fraction = 0.1;  // seeded per-domain split for checkpoint selection
    int probe_epochs = 200;
    double probe_lr = 0.1;

    void validate() const;
};

struct EpochRow {
    std::size_t epoch = 0;
    double total = 0.0;
    double ce = 0.0;
    double mer_marg = 0.0;  // raw marginal loss summed over modalities
    double mer_spec = 0.0;  // raw spectral loss summed over modalities
    double src_val_acc = 0.0;
    double tgt_acc = 0.0;
};

struct TrainOutput {
    std::vector<EpochRow> table;  // row e is evaluated before epoch e's updates
    FusionModel best_model;       // checkpoint with the best source-validation accuracy
    std::size_t best_epoch = 0;
    double best_val_acc = 0.0;
    FusionModel final_model;
};

/// Minibatch Adam training on the pooled source domains with seeded shuffling,
/// per-epoch metric rows, and best-validation checkpoint selection (earliest
/// row wins ties).
TrainOutput train(FusionModel model, const DatasetBundle& data, const TrainConfig& cfg);

struct StandaloneProbeResult {
    double source_holdout_acc = 0.0;
    double target_acc = 0.0;
};

/// Linear probe on frozen features: seeded class-stratified 80/20 split of the
/// source features, trained on the 80% side, evaluated on the held-out source
/// rows and on the target features.
StandaloneProbeResult standalone_probe(const Matrix& src_features,
                                       const std::vector<int>& src_labels,
                                       const Matrix& tgt_features,
                                       const std::vector<int>& tgt_labels,
                                       std::size_t num_classes, SeededRng& rng, int epochs = 200,
                                       double lr = 0.1);

/// Pools the training split rows of every source domain (the complement of the
/// validation split used for checkpointing), in domain order.
struct PooledData {
    std::vector<Matrix> inputs;  // per modality
    std::vector<int> labels;
};

PooledData pool_domains(const std::vector<DomainData>& domains);

}  // namespace merdg
