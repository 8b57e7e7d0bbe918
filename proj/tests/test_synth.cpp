#include <cmath>

#include "doctest.h"
#include "merdg/diagnostics.hpp"
#include "merdg/synth.hpp"
#include "merdg/train.hpp"

using namespace merdg;

namespace {

// Concatenate all modalities of a domain into one raw-feature matrix.
Matrix concat_raw(const DomainData& dom) {
    std::size_t width = 0;
    for (const Matrix& m : dom.modalities) width += m.cols();
    Matrix out(dom.labels.size(), width);
    std::size_t at = 0;
    for (const Matrix& m : dom.modalities) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            std::copy(m.row(i), m.row(i) + m.cols(), out.row(i) + at);
        }
        at += m.cols();
    }
    return out;
}

double linear_accuracy(const Matrix& train_x, const std::vector<int>& train_y,
                       const Matrix& test_x, const std::vector<int>& test_y, std::size_t k) {
    LinearProbe probe = fit_linear_probe(train_x, train_y, k, 200, 0.1);
    return probe_accuracy(probe, test_x, test_y);
}

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.samples_per_domain = 300;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("same seed gives a bit-identical bundle") {
    SynthConfig cfg = small_config();
    DatasetBundle a = generate(cfg);
    DatasetBundle b = generate(cfg);
    CHECK(a.sources[0].labels == b.sources[0].labels);
    for (std::size_t m = 0; m < cfg.num_modalities; ++m) {
        CHECK(a.sources[0].modalities[m].values() == b.sources[0].modalities[m].values());
        CHECK(a.target.modalities[m].values() == b.target.modalities[m].values());
    }
    CHECK(a.generator.derangement == b.generator.derangement);

    SynthConfig other = cfg;
    other.seed = 12;
    DatasetBundle c = generate(other);
    CHECK(a.sources[0].modalities[0].values() != c.sources[0].modalities[0].values());
}

TEST_CASE("derangement has no fixed points") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthConfig cfg = small_config();
        cfg.samples_per_domain = 8;
        cfg.seed = seed;
        DatasetBundle bundle = generate(cfg);
        REQUIRE(bundle.generator.derangement.size() == cfg.num_classes);
        for (std::size_t y = 0; y < cfg.num_classes; ++y) {
            CHECK(bundle.generator.derangement[y] != y);
        }
    }
}

TEST_CASE("label-free configuration is at chance everywhere") {
    SynthConfig cfg = small_config();
    cfg.invariant_strength = 0.0;
    cfg.cooccurrence_strength = 0.0;
    DatasetBundle bundle = generate(cfg);
    const double k = static_cast<double>(cfg.num_classes);

    // Train on the first half of source_0 and evaluate held-out data from
    // every domain; label-independent features cannot beat chance there.
    const Matrix full = concat_raw(bundle.sources[0]);
    const std::size_t half = full.rows() / 2;
    Matrix train_x(half, full.cols());
    std::vector<int> train_y(bundle.sources[0].labels.begin(),
                             bundle.sources[0].labels.begin() + half);
    Matrix hold_x(full.rows() - half, full.cols());
    std::vector<int> hold_y(bundle.sources[0].labels.begin() + half,
                            bundle.sources[0].labels.end());
    for (std::size_t i = 0; i < half; ++i)
        std::copy(full.row(i), full.row(i) + full.cols(), train_x.row(i));
    for (std::size_t i = half; i < full.rows(); ++i)
        std::copy(full.row(i), full.row(i) + full.cols(), hold_x.row(i - half));

    LinearProbe probe = fit_linear_probe(train_x, train_y, cfg.num_classes, 200, 0.1);
    CHECK(std::fabs(probe_accuracy(probe, hold_x, hold_y) - 1.0 / k) < 0.1);
    CHECK(std::fabs(probe_accuracy(probe, concat_raw(bundle.sources[1]),
                                   bundle.sources[1].labels) -
                    1.0 / k) < 0.1);
    CHECK(std::fabs(probe_accuracy(probe, concat_raw(bundle.target), bundle.target.labels) -
                    1.0 / k) < 0.1);
}

TEST_CASE("pure co-occurrence transfers to sources but not to the target") {
    SynthConfig cfg = small_config();
    cfg.invariant_strength = 0.0;
    cfg.latent_mean_scale = 1.0;  // strong latent separation for this check
    DatasetBundle bundle = generate(cfg);

    const Matrix train_x = concat_raw(bundle.sources[0]);
    const double src_acc = linear_accuracy(train_x, bundle.sources[0].labels,
                                           concat_raw(bundle.sources[1]),
                                           bundle.sources[1].labels, cfg.num_classes);
    const double tgt_acc = linear_accuracy(train_x, bundle.sources[0].labels,
                                           concat_raw(bundle.target), bundle.target.labels,
                                           cfg.num_classes);
    CHECK(src_acc > 0.9);
    CHECK(tgt_acc <= 1.0 / static_cast<double>(cfg.num_classes) + 0.1);
}

TEST_CASE("invariant channel transfers when the latent is disabled") {
    // Median over 5 seeds of the source-to-target accuracy gap.
    std::vector<double> gaps;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SynthConfig cfg = small_config();
        cfg.cooccurrence_strength = 0.0;
        cfg.invariant_strength = 1.2;  // make the only channel clearly learnable
        cfg.seed = 40 + seed;
        DatasetBundle bundle = generate(cfg);
        const Matrix train_x = concat_raw(bundle.sources[0]);
        const double src = linear_accuracy(train_x, bundle.sources[0].labels,
                                           concat_raw(bundle.sources[1]),
                                           bundle.sources[1].labels, cfg.num_classes);
        const double tgt = linear_accuracy(train_x, bundle.sources[0].labels,
                                           concat_raw(bundle.target), bundle.target.labels,
                                           cfg.num_classes);
        gaps.push_back(src - tgt);
    }
    std::sort(gaps.begin(), gaps.end());
    CHECK(std::fabs(gaps[2]) < 0.05);
}

TEST_CASE("describe") {
    SynthConfig cfg = small_config();
    DatasetBundle bundle = generate(cfg);
    DescribeReport report = describe(bundle);
    REQUIRE(report.domains.size() == cfg.num_source_domains + 1);
    for (const DomainSummary& d : report.domains) {
        std::size_t total = 0;
        for (std::size_t c : d.class_counts) total += c;
        CHECK(total == cfg.samples_per_domain);
    }

    // Deterministic per bundle.
    DescribeReport again = describe(bundle);
    CHECK(to_text(again) == to_text(report));

    // Without the shared latent the modalities decorrelate.
    SynthConfig indep = cfg;
    indep.cooccurrence_strength = 0.0;
    DescribeReport indep_report = describe(generate(indep));
    for (const DomainSummary& d : indep_report.domains) {
        CHECK(d.cross_modal_abs_corr < 0.1);
    }
}

TEST_CASE("restrict_to_modality") {
    DatasetBundle bundle = generate(small_config());
    DatasetBundle uni = restrict_to_modality(bundle, 1);
    CHECK(uni.config.num_modalities == 1);
    CHECK(uni.config.input_dims[0] == bundle.config.input_dims[1]);
    CHECK(uni.sources[0].modalities.size() == 1);
    CHECK(uni.sources[0].modalities[0].values() == bundle.sources[0].modalities[1].values());
    CHECK_THROWS_AS(restrict_to_modality(bundle, 7), ContractError);
}

TEST_CASE("config validation") {
    SynthConfig cfg;
    cfg.num_classes = 1;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = SynthConfig{};
    cfg.noise_std = {0.8};  // one entry for two modalities
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = SynthConfig{};
    cfg.invariant_strength = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
}

}  // TEST_SUITE
