#include "merdg/runner.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "merdg/diagnostics.hpp"

namespace merdg {

namespace {

namespace fs = std::filesystem;

std::string join_u64(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += format_double(values[i], 17);
    }
    return out;
}

const std::vector<std::string> kSynthKeys = {
    "num_classes",       "num_modalities",       "input_dims",      "num_source_domains",
    "samples_per_domain", "latent_dim",          "invariant_strength",
    "cooccurrence_strength", "noise_std",        "latent_mean_scale", "seed"};

const std::vector<std::string> kExperimentKeys = {
    "learning_rate", "batch_size",    "epochs",        "seed",          "val_fraction",
    "encoder_hidden", "encoder_output_dim", "mer_enabled", "mer.gamma",  "mer.eps",
    "mer.alpha_marg", "mer.alpha_spec", "mer.lambda",  "baseline_reg",  "baseline_param",
    "train_unimodal", "probe_epochs",  "probe_lr",      "data_dir"};

}  // namespace

SynthConfig synth_config_from_kv(const KvConfig& kv) {
    kv.reject_unknown_keys(kSynthKeys);
    SynthConfig cfg;
    cfg.num_classes = kv.get_u64_or("num_classes", cfg.num_classes);
    cfg.num_modalities = kv.get_u64_or("num_modalities", cfg.num_modalities);
    if (kv.has("input_dims")) {
        cfg.input_dims.clear();
        for (std::uint64_t v : kv.get_u64_list("input_dims")) cfg.input_dims.push_back(v);
    }
    cfg.num_source_domains = kv.get_u64_or("num_source_domains", cfg.num_source_domains);
    cfg.samples_per_domain = kv.get_u64_or("samples_per_domain", cfg.samples_per_domain);
    cfg.latent_dim = kv.get_u64_or("latent_dim", cfg.latent_dim);
    cfg.invariant_strength = kv.get_double_or("invariant_strength", cfg.invariant_strength);
    cfg.cooccurrence_strength =
        kv.get_double_or("cooccurrence_strength", cfg.cooccurrence_strength);
    if (kv.has("noise_std")) cfg.noise_std = kv.get_double_list("noise_std");
    cfg.latent_mean_scale = kv.get_double_or("latent_mean_scale", cfg.latent_mean_scale);
    cfg.seed = kv.get_u64_or("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

KvConfig synth_config_to_kv(const SynthConfig& cfg) {
    KvConfig kv;
    kv.set("num_classes", std::to_string(cfg.num_classes));
    kv.set("num_modalities", std::to_string(cfg.num_modalities));
    kv.set("input_dims", join_u64(cfg.input_dims));
    kv.set("num_source_domains", std::to_string(cfg.num_source_domains));
    kv.set("samples_per_domain", std::to_string(cfg.samples_per_domain));
    kv.set("latent_dim", std::to_string(cfg.latent_dim));
    kv.set("invariant_strength", format_double(cfg.invariant_strength, 17));
    kv.set("cooccurrence_strength", format_double(cfg.cooccurrence_strength, 17));
    kv.set("noise_std", join_doubles(cfg.noise_std));
    kv.set("latent_mean_scale", format_double(cfg.latent_mean_scale, 17));
    kv.set("seed", std::to_string(cfg.seed));
    return kv;
}

void write_bundle(const DatasetBundle& bundle, const fs::path& dir) {
    fs::create_directories(dir);
    synth_config_to_kv(bundle.config).write_file(dir / "dataset.txt");

    for (const DomainData* dom : bundle.all_domains()) {
        const fs::path dom_dir = dir / dom->name;
        fs::create_directories(dom_dir);
        for (std::size_t m = 0; m < dom->modalities.size(); ++m) {
            write_feature_file(dom_dir / ("modality_" + std::to_string(m) + ".feat"),
                               dom->modalities[m]);
        }
        write_label_file(dom_dir / "labels.txt", dom->labels);
    }

    const fs::path gen_dir = dir / "generator";
    fs::create_directories(gen_dir);
    for (std::size_t m = 0; m < bundle.generator.dictionaries.size(); ++m) {
        write_feature_file(gen_dir / ("dictionary_m" + std::to_string(m) + ".feat"),
                           bundle.generator.dictionaries[m]);
        write_feature_file(gen_dir / ("mixing_map_m" + std::to_string(m) + ".feat"),
                           bundle.generator.mixing_maps[m]);
    }
    write_feature_file(gen_dir / "latent_means.feat", bundle.generator.latent_means);
    std::vector<int> der;
    for (std::size_t v : bundle.generator.derangement) der.push_back(static_cast<int>(v));
    write_label_file(gen_dir / "derangement.txt", der);
}

DatasetBundle load_bundle(const fs::path& dir) {
    DatasetBundle bundle;
    bundle.config = synth_config_from_kv(KvConfig::parse_file(dir / "dataset.txt"));

    auto load_domain = [&](const std::string& name) {
        DomainData dom;
        dom.name = name;
        const fs::path dom_dir = dir / name;
        for (std::size_t m = 0; m < bundle.config.num_modalities; ++m) {
            dom.modalities.push_back(
                read_feature_file(dom_dir / ("modality_" + std::to_string(m) + ".feat")));
        }
        dom.labels = read_label_file(dom_dir / "labels.txt");
        for (const Matrix& mm : dom.modalities) {
            if (mm.rows() != dom.labels.size()) {
                throw ContractError(name + ": label count does not match feature rows");
            }
        }
        for (int y : dom.labels) {
            if (static_cast<std::size_t>(y) >= bundle.config.num_classes) {
                throw ContractError(name + ": label out of range");
            }
        }
        return dom;
    };

    for (std::size_t s = 0; s < bundle.config.num_source_domains; ++s) {
        bundle.sources.push_back(load_domain("source_" + std::to_string(s)));
    }
    bundle.target = load_domain("target");

    const fs::path gen_dir = dir / "generator";
    if (fs::exists(gen_dir)) {
        for (std::size_t m = 0; m < bundle.config.num_modalities; ++m) {
            bundle.generator.dictionaries.push_back(
                read_feature_file(gen_dir / ("dictionary_m" + std::to_string(m) + ".feat")));
            bundle.generator.mixing_maps.push_back(
                read_feature_file(gen_dir / ("mixing_map_m" + std::to_string(m) + ".feat")));
        }
        bundle.generator.latent_means = read_feature_file(gen_dir / "latent_means.feat");
        for (int v : read_label_file(gen_dir / "derangement.txt")) {
            bundle.generator.derangement.push_back(static_cast<std::size_t>(v));
        }
    }
    return bundle;
}

ExperimentConfig experiment_config_from_kv(const KvConfig& kv) {
    kv.reject_unknown_keys(kExperimentKeys);
    ExperimentConfig cfg;
    cfg.train.learning_rate = kv.get_double_or("learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = kv.get_u64_or("batch_size", cfg.train.batch_size);
    cfg.train.epochs = kv.get_u64_or("epochs", cfg.train.epochs);
    cfg.train.seed = kv.get_u64_or("seed", cfg.train.seed);
    cfg.train.val_fraction = kv.get_double_or("val_fraction", cfg.train.val_fraction);
    if (kv.has("encoder_hidden")) {
        cfg.encoder_hidden.clear();
        for (std::uint64_t v : kv.get_u64_list("encoder_hidden")) cfg.encoder_hidden.push_back(v);
    }
    cfg.encoder_out = kv.get_u64_or("encoder_output_dim", cfg.encoder_out);
    cfg.mer_enabled = kv.get_bool_or("mer_enabled", false);
    MerConfig mer;
    mer.gamma = kv.get_double_or("mer.gamma", mer.gamma);
    mer.eps = kv.get_double_or("mer.eps", mer.eps);
    mer.alpha_marg = kv.get_double_or("mer.alpha_marg", mer.alpha_marg);
    mer.alpha_spec = kv.get_double_or("mer.alpha_spec", mer.alpha_spec);
    mer.lambda = kv.get_double_or("mer.lambda", mer.lambda);
    cfg.train.mer = cfg.mer_enabled ? std::optional<MerConfig>(mer) : std::nullopt;
    cfg.train.baseline = parse_baseline_reg(kv.get_string_or("baseline_reg", "none"));
    cfg.train.baseline_param = kv.get_double_or("baseline_param", 0.0);
    cfg.train_unimodal = kv.get_bool_or("train_unimodal", false);
    cfg.train.probe_epochs = static_cast<int>(kv.get_u64_or("probe_epochs", 200));
    cfg.train.probe_lr = kv.get_double_or("probe_lr", 0.1);
    cfg.data_dir = kv.get_string_or("data_dir", "");
    // Stash the full MER block even when disabled so snapshots replay identically.
    if (!cfg.mer_enabled) cfg.train.mer = std::nullopt;
    cfg.mer_snapshot = mer;
    return cfg;
}

KvConfig experiment_config_to_kv(const ExperimentConfig& cfg) {
    KvConfig kv;
    kv.set("learning_rate", format_double(cfg.train.learning_rate, 17));
    kv.set("batch_size", std::to_string(cfg.train.batch_size));
    kv.set("epochs", std::to_string(cfg.train.epochs));
    kv.set("seed", std::to_string(cfg.train.seed));
    kv.set("val_fraction", format_double(cfg.train.val_fraction, 17));
    kv.set("encoder_hidden", join_u64(cfg.encoder_hidden));
    kv.set("encoder_output_dim", std::to_string(cfg.encoder_out));
    kv.set("mer_enabled", cfg.mer_enabled ? "true" : "false");
    const MerConfig mer = cfg.train.mer ? *cfg.train.mer : cfg.mer_snapshot;
    kv.set("mer.gamma", format_double(mer.gamma, 17));
    kv.set("mer.eps", format_double(mer.eps, 17));
    kv.set("mer.alpha_marg", format_double(mer.alpha_marg, 17));
    kv.set("mer.alpha_spec", format_double(mer.alpha_spec, 17));
    kv.set("mer.lambda", format_double(mer.lambda, 17));
    kv.set("baseline_reg", baseline_reg_name(cfg.train.baseline));
    kv.set("baseline_param", format_double(cfg.train.baseline_param, 17));
    kv.set("train_unimodal", cfg.train_unimodal ? "true" : "false");
    kv.set("probe_epochs", std::to_string(cfg.train.probe_epochs));
    kv.set("probe_lr", format_double(cfg.train.probe_lr, 17));
    kv.set("data_dir", cfg.data_dir);
    return kv;
}

namespace {

constexpr char kModelMagic[8] = {'M', 'E', 'R', 'M', 'O', 'D', 'L', '1'};

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_doubles(std::string& buf, const double* p, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) put_u64(buf, std::bit_cast<std::uint64_t>(p[i]));
}

struct Reader {
    const unsigned char* p;
    std::size_t left;
    std::string origin;

    std::uint64_t u64() {
        if (left < 8) throw FormatError(origin + ": truncated model file");
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        p += 8;
        left -= 8;
        return v;
    }
    void doubles(double* out, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<double>(u64());
    }
};

}  // namespace

void save_model(const FusionModel& model, const fs::path& path) {
    std::string buf;
    buf.append(kModelMagic, sizeof(kModelMagic));
    put_u64(buf, model.num_classes);
    put_u64(buf, model.num_modalities());
    for (const Mlp& enc : model.encoders) {
        put_u64(buf, enc.widths.size());
        for (std::size_t w : enc.widths) put_u64(buf, w);
        for (std::size_t l = 0; l < enc.weights.size(); ++l) {
            put_doubles(buf, enc.weights[l].data(), enc.weights[l].size());
            put_doubles(buf, enc.biases[l].data(), enc.biases[l].size());
        }
    }
    put_u64(buf, model.classifier_w.rows());
    put_u64(buf, model.classifier_w.cols());
    put_doubles(buf, model.classifier_w.data(), model.classifier_w.size());
    put_doubles(buf, model.classifier_b.data(), model.classifier_b.size());
    write_text_file(path, buf);
}

FusionModel load_model(const fs::path& path) {
    const std::string raw = read_text_file(path);
    if (raw.size() < 8 || std::memcmp(raw.data(), kModelMagic, 8) != 0) {
        throw FormatError(path.string() + ": bad model magic at byte offset 0");
    }
    Reader r{reinterpret_cast<const unsigned char*>(raw.data()) + 8, raw.size() - 8,
             path.string()};
    FusionModel model;
    model.num_classes = r.u64();
    const std::uint64_t m_count = r.u64();
    for (std::uint64_t m = 0; m < m_count; ++m) {
        Mlp enc;
        const std::uint64_t widths = r.u64();
        for (std::uint64_t i = 0; i < widths; ++i) enc.widths.push_back(r.u64());
        for (std::size_t l = 0; l + 1 < enc.widths.size(); ++l) {
            Matrix w(enc.widths[l], enc.widths[l + 1]);
            r.doubles(w.data(), w.size());
            std::vector<double> b(enc.widths[l + 1]);
            r.doubles(b.data(), b.size());
            enc.weights.push_back(std::move(w));
            enc.biases.push_back(std::move(b));
        }
        model.encoders.push_back(std::move(enc));
    }
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    model.classifier_w = Matrix(rows, cols);
    r.doubles(model.classifier_w.data(), model.classifier_w.size());
    model.classifier_b.assign(model.num_classes, 0.0);
    r.doubles(model.classifier_b.data(), model.classifier_b.size());
    if (r.left != 0) throw FormatError(path.string() + ": trailing bytes in model file");
    return model;
}

ModelDims dims_for(const DatasetBundle& bundle, const ExperimentConfig& cfg) {
    ModelDims dims;
    dims.input_dims = bundle.config.input_dims;
    dims.hidden = cfg.encoder_hidden;
    dims.encoder_out = cfg.encoder_out;
    dims.num_classes = bundle.config.num_classes;
    return dims;
}

std::vector<std::vector<std::string>> metrics_rows(const std::vector<EpochRow>& table) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(table.size());
    for (const EpochRow& r : table) {
        rows.push_back({std::to_string(r.epoch), format_double(r.total), format_double(r.ce),
                        format_double(r.mer_marg), format_double(r.mer_spec),
                        format_double(r.src_val_acc), format_double(r.tgt_acc)});
    }
    return rows;
}

namespace {

const std::vector<std::string> kMetricsHeader = {"epoch",    "total",       "ce",     "mer_marg",
                                                 "mer_spec", "src_val_acc", "tgt_acc"};

void export_features(const FusionModel& model, const DatasetBundle& bundle,
                     const std::string& prefix, const fs::path& feat_dir) {
    for (const DomainData* dom : bundle.all_domains()) {
        ForwardResult fwd = forward(model, dom->modalities);
        for (std::size_t m = 0; m < fwd.encoder_outputs.size(); ++m) {
            write_feature_file(feat_dir / (prefix + "_enc" + std::to_string(m) + "_" + dom->name +
                                           ".feat"),
                               fwd.encoder_outputs[m]);
        }
    }
}

}  // namespace

RunArtifacts run_training_experiment(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                                     const fs::path& run_dir) {
    fs::create_directories(run_dir);
    const fs::path feat_dir = run_dir / "features";
    fs::create_directories(feat_dir);

    experiment_config_to_kv(cfg).write_file(run_dir / "config.txt");

    RunArtifacts artifacts;
    FusionModel model = init_model(dims_for(bundle, cfg), derive_seed(cfg.train.seed, 0));
    artifacts.fusion = train(std::move(model), bundle, cfg.train);

    write_csv(run_dir / "metrics.csv", kMetricsHeader, metrics_rows(artifacts.fusion.table));
    save_model(artifacts.fusion.best_model, run_dir / "model.bin");
    export_features(artifacts.fusion.best_model, bundle, "fusion", feat_dir);
    for (const DomainData* dom : bundle.all_domains()) {
        write_label_file(feat_dir / ("labels_" + dom->name + ".txt"), dom->labels);
    }

    if (cfg.train_unimodal) {
        const fs::path uni_dir = run_dir / "unimodal";
        fs::create_directories(uni_dir);
        for (std::size_t m = 0; m < bundle.config.num_modalities; ++m) {
            DatasetBundle restricted = restrict_to_modality(bundle, m);
            ExperimentConfig uni_cfg = cfg;
            uni_cfg.mer_enabled = false;
            uni_cfg.train.mer = std::nullopt;
            FusionModel uni = init_model(dims_for(restricted, uni_cfg),
                                         derive_seed(cfg.train.seed, 10 + m));
            TrainOutput out = train(std::move(uni), restricted, uni_cfg.train);
            write_csv(uni_dir / ("metrics_m" + std::to_string(m) + ".csv"), kMetricsHeader,
                      metrics_rows(out.table));
            for (const DomainData* dom : restricted.all_domains()) {
                ForwardResult fwd = forward(out.best_model, dom->modalities);
                write_feature_file(feat_dir / ("uni_enc" + std::to_string(m) + "_" + dom->name +
                                               ".feat"),
                                   fwd.encoder_outputs[0]);
            }
            artifacts.unimodal.push_back(std::move(out));
        }
    }

    // Diagnostics summary for the selected checkpoint.
    KvConfig diag;
    diag.set("best_epoch", std::to_string(artifacts.fusion.best_epoch));
    diag.set("best_src_val_acc", format_double(artifacts.fusion.best_val_acc));
    diag.set("target_acc", format_double(accuracy(artifacts.fusion.best_model,
                                                  bundle.target.modalities,
                                                  bundle.target.labels)));
    PooledData pooled = pool_domains(bundle.sources);
    ForwardResult src_fwd = forward(artifacts.fusion.best_model, pooled.inputs);
    ForwardResult tgt_fwd = forward(artifacts.fusion.best_model, bundle.target.modalities);
    for (std::size_t m = 0; m < bundle.config.num_modalities; ++m) {
        const std::string tag = "enc" + std::to_string(m);
        diag.set(tag + ".rankme_target", format_double(rankme(tgt_fwd.encoder_outputs[m])));
        SeededRng probe_rng(derive_seed(cfg.train.seed, 100 + m));
        StandaloneProbeResult probe = standalone_probe(
            src_fwd.encoder_outputs[m], pooled.labels, tgt_fwd.encoder_outputs[m],
            bundle.target.labels, bundle.config.num_classes, probe_rng, cfg.train.probe_epochs,
            cfg.train.probe_lr);
        diag.set(tag + ".probe_src_holdout", format_double(probe.source_holdout_acc));
        diag.set(tag + ".probe_target", format_double(probe.target_acc));

        std::vector<Matrix> per_domain;
        for (const DomainData* dom : bundle.all_domains()) {
            per_domain.push_back(forward(artifacts.fusion.best_model, dom->modalities)
                                     .encoder_outputs[m]);
        }
        SeededRng dom_rng(derive_seed(cfg.train.seed, 200 + m));
        diag.set(tag + ".domain_probe_acc",
                 format_double(domain_probe(per_domain, dom_rng, cfg.train.probe_epochs,
                                            cfg.train.probe_lr)
                                   .accuracy));
    }
    diag.write_file(run_dir / "diagnostics.txt");
    return artifacts;
}

}  // namespace merdg
