#pragma once

#include <string>
#include <vector>

#include "merdg/matrix.hpp"

namespace merdg {

/// Knobs of the synthetic multimodal generator. Source domains share the
/// class-conditional latent means; the target domain sees them through a fixed
/// derangement of the class assignment, so the cross-modal channel misleads at
/// test time while the per-modality class dictionaries transfer unchanged.
struct SynthConfig {
    std::size_t num_classes = 4;
    std::size_t num_modalities = 2;
    std::vector<std::size_t> input_dims = {32, 24};
    std::size_t num_source_domains = 2;
    std::size_t samples_per_domain = 600;
    std::size_t latent_dim = 8;
    double invariant_strength = 1.5;    // weight of the class-dictionary channel
    double cooccurrence_strength = 1.2; // weight of the shared-latent channel
    std::vector<double> noise_std = {0.8, 0.8};
    double latent_mean_scale = 0.5;     // scale of the class-conditional latent means
    std::uint64_t seed = 1;

    void validate() const;
};

struct DomainData {
    std::string name;
    std::vector<Matrix> modalities;  // one N x d_m matrix per modality
    std::vector<int> labels;
};

struct GeneratorParams {
    std::vector<Matrix> dictionaries;      // per modality: d_m x K, unit-norm columns
    std::vector<Matrix> mixing_maps;       // per modality: d_m x latent_dim
    Matrix latent_means;                   // K x latent_dim
    std::vector<std::size_t> derangement;  // target class y draws latent means[derangement[y]]
};

struct DatasetBundle {
    SynthConfig config;
    GeneratorParams generator;
    std::vector<DomainData> sources;
    DomainData target;

    std::vector<const DomainData*> all_domains() const;
};

DatasetBundle generate(const SynthConfig& cfg);

/// Single-modality view, for training unimodal baselines.
DatasetBundle restrict_to_modality(const DatasetBundle& bundle, std::size_t modality);

struct DomainSummary {
    std::string name;
    std::vector<std::size_t> class_counts;
    std::vector<double> modality_mean;  // mean over all entries, per modality
    std::vector<double> modality_std;
    double cross_modal_abs_corr = 0.0;  // mean |pearson| across dimension pairs
};

struct DescribeReport {
    std::vector<DomainSummary> domains;
};

DescribeReport describe(const DatasetBundle& bundle);
std::string to_text(const DescribeReport& report);

}  // namespace merdg
