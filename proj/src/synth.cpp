#include "merdg/synth.hpp"

#include <cmath>
#include <sstream>

#include "merdg/rng.hpp"

namespace merdg {

namespace {

constexpr double kLatentJitterStd = 0.3162277660168379;  // sqrt(0.1)

bool is_derangement(const std::vector<std::size_t>& pi) {
    for (std::size_t i = 0; i < pi.size(); ++i) {
        if (pi[i] == i) return false;
    }
    return true;
}

// The target domain relabels the latent means by a derangement, so the joint
// cross-modal code always points at the wrong class. Among derangements we
// prefer one whose per-modality group digits are preserved for as close to
// half the classes as possible: a single modality's group channel then carries
// no systematic signal (for or against) at the target, and only the joint
// pattern misleads.
std::vector<std::size_t> draw_derangement(std::size_t k, std::size_t num_modalities,
                                          std::size_t radix, SeededRng& rng) {
    auto digit = [radix](std::size_t y, std::size_t m) {
        std::size_t scale = 1;
        for (std::size_t i = 0; i < m; ++i) scale *= radix;
        return (y / scale) % radix;
    };
    auto score = [&](const std::vector<std::size_t>& pi) {
        double total = 0.0;
        for (std::size_t m = 0; m < num_modalities; ++m) {
            std::size_t preserved = 0;
            for (std::size_t y = 0; y < k; ++y) {
                if (digit(pi[y], m) == digit(y, m)) ++preserved;
            }
            total += std::fabs(static_cast<double>(preserved) - static_cast<double>(k) / 2.0);
        }
        return total;
    };

    std::vector<std::size_t> best;
    double best_score = 1e300;
    const std::size_t attempts = k <= 8 ? 5000 : 500;
    std::vector<std::size_t> pi(k);
    for (std::size_t i = 0; i < k; ++i) pi[i] = i;
    for (std::size_t t = 0; t < attempts; ++t) {
        shuffle(pi, rng);
        if (!is_derangement(pi)) continue;
        const double s = score(pi);
        if (s < best_score) {
            best_score = s;
            best = pi;
        }
    }
    while (best.empty()) {  // tiny k: keep drawing until a derangement shows up
        shuffle(pi, rng);
        if (is_derangement(pi)) best = pi;
    }
    return best;
}

DomainData generate_domain(const SynthConfig& cfg, const GeneratorParams& gen,
                           const std::string& name, bool deranged, SeededRng& rng) {
    DomainData dom;
    dom.name = name;
    const std::size_t n = cfg.samples_per_domain;
    const std::size_t k = cfg.num_classes;

    dom.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) dom.labels[i] = static_cast<int>(i % k);
    shuffle(dom.labels, rng);

    for (std::size_t m = 0; m < cfg.num_modalities; ++m) {
        dom.modalities.emplace_back(n, cfg.input_dims[m]);
    }

    std::vector<double> latent(cfg.latent_dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<std::size_t>(dom.labels[i]);
        const std::size_t mean_row = deranged ? gen.derangement[y] : y;
        for (std::size_t l = 0; l < cfg.latent_dim; ++l) {
            latent[l] = gen.latent_means(mean_row, l) + kLatentJitterStd * rng.next_normal();
        }
        for (std::size_t m = 0; m < cfg.num_modalities; ++m) {
            const std::size_t d = cfg.input_dims[m];
            double* row = dom.modalities[m].row(i);
            const Matrix& dict = gen.dictionaries[m];
            const Matrix& map = gen.mixing_maps[m];
            for (std::size_t j = 0; j < d; ++j) {
                double v = cfg.invariant_strength * dict(j, y);
                for (std::size_t l = 0; l < cfg.latent_dim; ++l) {
                    v += cfg.cooccurrence_strength * map(j, l) * latent[l];
                }
                row[j] = v + cfg.noise_std[m] * rng.next_normal();
            }
        }
    }
    for (const Matrix& m : dom.modalities) m.ensure_finite("generate_domain");
    return dom;
}

}  // namespace

void SynthConfig::validate() const {
    if (num_classes < 2) throw ContractError("SynthConfig: num_classes must be >= 2");
    if (num_modalities < 1) throw ContractError("SynthConfig: num_modalities must be >= 1");
    if (num_source_domains < 1) throw ContractError("SynthConfig: num_source_domains must be >= 1");
    if (samples_per_domain < 1) throw ContractError("SynthConfig: samples_per_domain must be >= 1");
    if (latent_dim < 1) throw ContractError("SynthConfig: latent_dim must be >= 1");
    if (latent_dim < num_modalities) {
        throw ContractError("SynthConfig: latent_dim must be >= num_modalities");
    }
    if (input_dims.size() != num_modalities) {
        throw ContractError("SynthConfig: input_dims must list one width per modality");
    }
    for (std::size_t d : input_dims) {
        if (d == 0) throw ContractError("SynthConfig: input dims must be positive");
    }
    if (noise_std.size() != num_modalities) {
        throw ContractError("SynthConfig: noise_std must list one value per modality");
    }
    for (double s : noise_std) {
        if (s < 0.0) throw ContractError("SynthConfig: noise_std must be >= 0");
    }
    if (invariant_strength < 0.0) throw ContractError("SynthConfig: invariant_strength must be >= 0");
    if (cooccurrence_strength < 0.0) {
        throw ContractError("SynthConfig: cooccurrence_strength must be >= 0");
    }
    if (latent_mean_scale < 0.0) throw ContractError("SynthConfig: latent_mean_scale must be >= 0");
}

std::vector<const DomainData*> DatasetBundle::all_domains() const {
    std::vector<const DomainData*> out;
    for (const DomainData& d : sources) out.push_back(&d);
    out.push_back(&target);
    return out;
}

DatasetBundle generate(const SynthConfig& cfg) {
    cfg.validate();
    DatasetBundle bundle;
    bundle.config = cfg;

    // Each modality's mixing map reads only its own block of the shared
    // latent, and the class-conditional latent means carry only a group label
    // per block (mixed-radix digits of the class index). A single modality
    // then sees an ambiguous group, while the blocks jointly identify the
    // class, so the latent channel is informative only across modalities.
    const std::size_t m_count = cfg.num_modalities;
    std::vector<std::size_t> block_begin(m_count), block_end(m_count);
    {
        const std::size_t base = cfg.latent_dim / m_count;
        for (std::size_t m = 0; m < m_count; ++m) {
            block_begin[m] = m * base;
            block_end[m] = (m + 1 == m_count) ? cfg.latent_dim : (m + 1) * base;
        }
    }
    std::size_t radix = 1;
    while (std::pow(static_cast<double>(radix), static_cast<double>(m_count)) <
           static_cast<double>(cfg.num_classes)) {
        ++radix;
    }

    SeededRng master(cfg.seed);
    SeededRng derangement_rng(derive_seed(cfg.seed, 77));
    for (std::size_t m = 0; m < m_count; ++m) {
        Matrix dict = gaussian_matrix(master, cfg.input_dims[m], cfg.num_classes);
        for (std::size_t c = 0; c < cfg.num_classes; ++c) {
            double norm = 0.0;
            for (std::size_t j = 0; j < dict.rows(); ++j) norm += dict(j, c) * dict(j, c);
            norm = std::sqrt(norm);
            if (norm == 0.0) throw NumericError("generate: degenerate dictionary column");
            for (std::size_t j = 0; j < dict.rows(); ++j) dict(j, c) /= norm;
        }
        bundle.generator.dictionaries.push_back(std::move(dict));

        const std::size_t width = block_end[m] - block_begin[m];
        Matrix block = gaussian_matrix(master, cfg.input_dims[m], width);
        block *= 1.0 / std::sqrt(static_cast<double>(width));
        Matrix map(cfg.input_dims[m], cfg.latent_dim);
        for (std::size_t j = 0; j < map.rows(); ++j) {
            for (std::size_t l = 0; l < width; ++l) map(j, block_begin[m] + l) = block(j, l);
        }
        bundle.generator.mixing_maps.push_back(std::move(map));
    }

    bundle.generator.latent_means = Matrix(cfg.num_classes, cfg.latent_dim);
    {
        std::size_t digit_scale = 1;
        for (std::size_t m = 0; m < m_count; ++m) {
            const std::size_t width = block_end[m] - block_begin[m];
            // Group centers at a seed-independent scale: centered, then each
            // normalized to norm latent_mean_scale * sqrt(width), so the code
            // strength does not swing with the luck of the Gaussian draw.
            Matrix centers = gaussian_matrix(master, radix, width);
            for (std::size_t l = 0; l < width; ++l) {
                double mean = 0.0;
                for (std::size_t g = 0; g < radix; ++g) mean += centers(g, l);
                mean /= static_cast<double>(radix);
                for (std::size_t g = 0; g < radix; ++g) centers(g, l) -= mean;
            }
            const double target_norm =
                cfg.latent_mean_scale * std::sqrt(static_cast<double>(width));
            for (std::size_t g = 0; g < radix; ++g) {
                double norm = 0.0;
                for (std::size_t l = 0; l < width; ++l) norm += centers(g, l) * centers(g, l);
                norm = std::sqrt(norm);
                if (norm == 0.0) throw NumericError("generate: degenerate group center");
                for (std::size_t l = 0; l < width; ++l) {
                    centers(g, l) *= target_norm / norm;
                }
            }
            for (std::size_t y = 0; y < cfg.num_classes; ++y) {
                const std::size_t digit = (y / digit_scale) % radix;
                for (std::size_t l = 0; l < width; ++l) {
                    bundle.generator.latent_means(y, block_begin[m] + l) = centers(digit, l);
                }
            }
            digit_scale *= radix;
        }
    }
    bundle.generator.derangement =
        draw_derangement(cfg.num_classes, m_count, radix, derangement_rng);

    for (std::size_t s = 0; s < cfg.num_source_domains; ++s) {
        SeededRng dom_rng(derive_seed(cfg.seed, 1000 + s));
        bundle.sources.push_back(generate_domain(cfg, bundle.generator,
                                                 "source_" + std::to_string(s),
                                                 /*deranged=*/false, dom_rng));
    }
    SeededRng tgt_rng(derive_seed(cfg.seed, 1000 + cfg.num_source_domains));
    bundle.target =
        generate_domain(cfg, bundle.generator, "target", /*deranged=*/true, tgt_rng);
    return bundle;
}

DatasetBundle restrict_to_modality(const DatasetBundle& bundle, std::size_t modality) {
    if (modality >= bundle.config.num_modalities) {
        throw ContractError("restrict_to_modality: unknown modality index");
    }
    DatasetBundle out;
    out.config = bundle.config;
    out.config.num_modalities = 1;
    out.config.input_dims = {bundle.config.input_dims[modality]};
    out.config.noise_std = {bundle.config.noise_std[modality]};
    out.generator.dictionaries = {bundle.generator.dictionaries[modality]};
    out.generator.mixing_maps = {bundle.generator.mixing_maps[modality]};
    out.generator.latent_means = bundle.generator.latent_means;
    out.generator.derangement = bundle.generator.derangement;
    auto restrict_domain = [modality](const DomainData& d) {
        DomainData r;
        r.name = d.name;
        r.labels = d.labels;
        r.modalities = {d.modalities[modality]};
        return r;
    };
    for (const DomainData& d : bundle.sources) out.sources.push_back(restrict_domain(d));
    out.target = restrict_domain(bundle.target);
    return out;
}

DescribeReport describe(const DatasetBundle& bundle) {
    DescribeReport report;
    for (const DomainData* dom : bundle.all_domains()) {
        DomainSummary s;
        s.name = dom->name;
        s.class_counts.assign(bundle.config.num_classes, 0);
        for (int y : dom->labels) s.class_counts[static_cast<std::size_t>(y)]++;
        for (const Matrix& m : dom->modalities) {
            double mean = 0.0;
            for (double v : m.values()) mean += v;
            mean /= static_cast<double>(m.size());
            double var = 0.0;
            for (double v : m.values()) var += (v - mean) * (v - mean);
            var /= static_cast<double>(m.size());
            s.modality_mean.push_back(mean);
            s.modality_std.push_back(std::sqrt(var));
        }
        if (dom->modalities.size() >= 2) {
            // Mean absolute Pearson correlation across all dimension pairs of
            // the first two modalities.
            const Matrix& a = dom->modalities[0];
            const Matrix& b = dom->modalities[1];
            const std::size_t n = a.rows();
            auto col_stats = [n](const Matrix& m, std::size_t j, double& mean, double& sd) {
                mean = 0.0;
                for (std::size_t i = 0; i < n; ++i) mean += m(i, j);
                mean /= static_cast<double>(n);
                sd = 0.0;
                for (std::size_t i = 0; i < n; ++i) sd += (m(i, j) - mean) * (m(i, j) - mean);
                sd = std::sqrt(sd);
            };
            double total = 0.0;
            std::size_t pairs = 0;
            std::vector<double> amean(a.cols()), asd(a.cols());
            std::vector<double> bmean(b.cols()), bsd(b.cols());
            for (std::size_t j = 0; j < a.cols(); ++j) col_stats(a, j, amean[j], asd[j]);
            for (std::size_t j = 0; j < b.cols(); ++j) col_stats(b, j, bmean[j], bsd[j]);
            for (std::size_t ja = 0; ja < a.cols(); ++ja) {
                for (std::size_t jb = 0; jb < b.cols(); ++jb) {
                    if (asd[ja] == 0.0 || bsd[jb] == 0.0) continue;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        dot += (a(i, ja) - amean[ja]) * (b(i, jb) - bmean[jb]);
                    }
                    total += std::fabs(dot / (asd[ja] * bsd[jb]));
                    ++pairs;
                }
            }
            s.cross_modal_abs_corr = pairs > 0 ? total / static_cast<double>(pairs) : 0.0;
        }
        report.domains.push_back(std::move(s));
    }
    return report;
}

std::string to_text(const DescribeReport& report) {
    std::ostringstream os;
    for (const DomainSummary& d : report.domains) {
        os << "domain " << d.name << "\n";
        os << "  class_counts =";
        for (std::size_t c : d.class_counts) os << " " << c;
        os << "\n";
        for (std::size_t m = 0; m < d.modality_mean.size(); ++m) {
            os << "  modality_" << m << "_mean = " << d.modality_mean[m]
               << "\n  modality_" << m << "_std = " << d.modality_std[m] << "\n";
        }
        os << "  cross_modal_abs_corr = " << d.cross_modal_abs_corr << "\n";
    }
    return os.str();
}

}  // namespace merdg
