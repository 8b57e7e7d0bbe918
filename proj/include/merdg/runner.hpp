#pragma once

#include <filesystem>

#include "merdg/io.hpp"
#include "merdg/synth.hpp"
#include "merdg/train.hpp"

namespace merdg {

SynthConfig synth_config_from_kv(const KvConfig& kv);
KvConfig synth_config_to_kv(const SynthConfig& cfg);

/// Writes one directory per domain (modality_<m>.feat + labels.txt), the
/// resolved config, and the generator parameters. Byte-deterministic.
void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle load_bundle(const std::filesystem::path& dir);

struct ExperimentConfig {
    TrainConfig train;
    std::vector<std::size_t> encoder_hidden = {64, 64};
    std::size_t encoder_out = 10;
    bool mer_enabled = false;
    bool train_unimodal = false;
    std::string data_dir;
    MerConfig mer_snapshot;  // kept in snapshots even when disabled, so replays are exact
};

ExperimentConfig experiment_config_from_kv(const KvConfig& kv);
KvConfig experiment_config_to_kv(const ExperimentConfig& cfg);

void save_model(const FusionModel& model, const std::filesystem::path& path);
FusionModel load_model(const std::filesystem::path& path);

struct RunArtifacts {
    TrainOutput fusion;
    std::vector<TrainOutput> unimodal;  // one per modality when requested
};

/// Trains per the config, then persists the run directory: config snapshot,
/// per-epoch metrics table, best-checkpoint model, per-encoder per-domain
/// feature exports, and a diagnostics summary.
RunArtifacts run_training_experiment(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                                     const std::filesystem::path& run_dir);

ModelDims dims_for(const DatasetBundle& bundle, const ExperimentConfig& cfg);

/// Metrics table rows rendered exactly as persisted in metrics.csv.
std::vector<std::vector<std::string>> metrics_rows(const std::vector<EpochRow>& table);

}  // namespace merdg
