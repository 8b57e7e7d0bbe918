#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "merdg/checks.hpp"
#include "merdg/diagnostics.hpp"
#include "merdg/runner.hpp"

namespace fs = std::filesystem;
using namespace merdg;

namespace {

// Exit codes: 0 success, 1 contract/usage error, 2 numeric/degenerate error.
constexpr int kExitOk = 0;
constexpr int kExitContract = 1;
constexpr int kExitNumeric = 2;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text_file(out_path, text);
    }
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t at = csv.find(',', start);
        if (at == std::string::npos) {
            if (start < csv.size()) out.push_back(csv.substr(start));
            return out;
        }
        out.push_back(csv.substr(start, at - start));
        start = at + 1;
    }
}

int cmd_grad_check(std::size_t n, std::size_t d, std::size_t seeds, double step) {
    GradCheckReport report = run_grad_check(n, d, seeds, step);
    std::cout << report.text;
    return report.pass ? kExitOk : kExitNumeric;
}

int cmd_losses(const std::string& input, double gamma, double eps, double alpha_marg,
               double alpha_spec) {
    Matrix z = read_feature_file(input);
    MerConfig cfg;
    cfg.gamma = gamma;
    cfg.eps = eps;
    cfg.alpha_marg = alpha_marg;
    cfg.alpha_spec = alpha_spec;
    auto [breakdown, grad] = mer_loss_grad(z, cfg);
    std::string out;
    out += "marginal_loss = " + format_double(breakdown.marginal_loss) + "\n";
    out += "spectral_loss = " + format_double(breakdown.spectral_loss) + "\n";
    out += "combined = " + format_double(breakdown.combined) + "\n";
    out += "correlation_logdet = " + format_double(breakdown.correlation_logdet) + "\n";
    out += "per_dim_sigma = ";
    for (std::size_t i = 0; i < breakdown.per_dim_sigma.size(); ++i) {
        if (i > 0) out += ",";
        out += format_double(breakdown.per_dim_sigma[i]);
    }
    out += "\n";
    std::cout << out;
    return kExitOk;
}

int cmd_diagnose(const std::string& a_path, const std::string& b_path,
                 const std::string& labels_a, const std::string& labels_b,
                 const std::string& metrics_csv, std::uint64_t seed) {
    Matrix a = read_feature_file(a_path);
    Matrix b = read_feature_file(b_path);
    const bool want_class_conditional = !labels_a.empty() || !labels_b.empty();
    if (want_class_conditional && (labels_a.empty() || labels_b.empty())) {
        throw ContractError("class-conditional diagnosis needs both --labels-a and --labels-b");
    }
    std::vector<int> ya, yb;
    if (want_class_conditional) {
        ya = read_label_file(labels_a);
        yb = read_label_file(labels_b);
    }

    std::string out;
    for (const std::string& metric : split_list(metrics_csv)) {
        if (metric == "rankme") {
            out += "rankme.a = " + format_double(rankme(a)) + "\n";
            out += "rankme.b = " + format_double(rankme(b)) + "\n";
            continue;
        }
        AlignmentMetric m = parse_alignment_metric(metric);
        if (want_class_conditional) {
            SeededRng rng(seed);
            AlignmentReport report = class_conditional_alignment(a, ya, b, yb, m, rng);
            out += metric + " = " + format_double(report.mean_score) + "\n";
            for (const auto& [cls, score] : report.per_class_scores) {
                out += metric + ".class" + std::to_string(cls) + " = " + format_double(score) + "\n";
            }
        } else {
            double score = 0.0;
            switch (m) {
                case AlignmentMetric::CkaLinear: score = cka_linear(a, b); break;
                case AlignmentMetric::CkaRbf: score = cka_rbf(a, b); break;
                case AlignmentMetric::Procrustes: score = procrustes_similarity(a, b); break;
            }
            out += metric + " = " + format_double(score) + "\n";
        }
    }
    std::cout << out;
    return kExitOk;
}

int cmd_spectrum(const std::string& input, const std::string& out_path) {
    Matrix z = read_feature_file(input);
    std::vector<double> values = spectrum(z);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        rows.push_back({std::to_string(i), format_double(values[i])});
    }
    emit(csv_to_string({"index", "log_normalized_singular_value"}, rows), out_path);
    return kExitOk;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
    SynthConfig cfg = synth_config_from_kv(KvConfig::parse_file(config_path));
    DatasetBundle bundle = generate(cfg);
    write_bundle(bundle, out_dir);
    DescribeReport report = describe(bundle);
    write_text_file(fs::path(out_dir) / "describe.txt", to_text(report));
    std::cout << "wrote " << bundle.sources.size() + 1 << " domains to " << out_dir << "\n";
    return kExitOk;
}

ExperimentConfig resolve_experiment(const std::string& config_path, const std::string& data_dir,
                                    bool mer_flag, const std::string& baseline) {
    ExperimentConfig cfg = experiment_config_from_kv(KvConfig::parse_file(config_path));
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    if (cfg.data_dir.empty()) {
        throw ContractError("no data directory: pass --data or set data_dir in the config");
    }
    if (mer_flag) {
        cfg.mer_enabled = true;
        cfg.train.mer = cfg.mer_snapshot;
    }
    if (!baseline.empty()) cfg.train.baseline = parse_baseline_reg(baseline);
    return cfg;
}

int cmd_train(const std::string& config_path, const std::string& data_dir, bool mer_flag,
              const std::string& baseline, const std::string& run_dir) {
    ExperimentConfig cfg = resolve_experiment(config_path, data_dir, mer_flag, baseline);
    DatasetBundle bundle = load_bundle(cfg.data_dir);
    RunArtifacts artifacts = run_training_experiment(bundle, cfg, run_dir);
    std::cout << "best_epoch = " << artifacts.fusion.best_epoch << "\n"
              << "best_src_val_acc = " << format_double(artifacts.fusion.best_val_acc) << "\n"
              << "run directory: " << run_dir << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& param, const std::string& values_csv,
              const std::string& config_path, const std::string& data_dir,
              const std::string& out_path) {
    if (param != "lambda" && param != "alpha_marg" && param != "alpha_spec") {
        throw ContractError("sweep parameter must be lambda, alpha_marg or alpha_spec");
    }
    std::vector<std::string> tokens = split_list(values_csv);
    if (tokens.empty()) throw ContractError("sweep: empty value list");

    ExperimentConfig base = resolve_experiment(config_path, data_dir, /*mer_flag=*/true, "");
    DatasetBundle bundle = load_bundle(base.data_dir);

    std::vector<std::vector<std::string>> rows;
    for (const std::string& tok : tokens) {
        const double value = parse_double(tok);
        ExperimentConfig cfg = base;
        MerConfig mer = cfg.mer_snapshot;
        if (param == "lambda") mer.lambda = value;
        if (param == "alpha_marg") mer.alpha_marg = value;
        if (param == "alpha_spec") mer.alpha_spec = value;
        cfg.train.mer = mer;
        FusionModel model = init_model(dims_for(bundle, cfg), derive_seed(cfg.train.seed, 0));
        TrainOutput out = train(std::move(model), bundle, cfg.train);
        const double tgt =
            accuracy(out.best_model, bundle.target.modalities, bundle.target.labels);
        rows.push_back({format_double(value), format_double(out.best_val_acc),
                        format_double(tgt)});
    }
    emit(csv_to_string({param, "src_val_acc", "tgt_acc"}, rows), out_path);
    return kExitOk;
}

int cmd_bench(std::size_t n, const std::string& d_list_csv, int reps,
              const std::string& out_path) {
    std::vector<std::size_t> d_list;
    for (const std::string& tok : split_list(d_list_csv)) {
        d_list.push_back(static_cast<std::size_t>(parse_u64(tok)));
    }
    std::vector<BenchRow> bench = run_bench(n, d_list, reps);
    std::vector<std::vector<std::string>> rows;
    for (const BenchRow& r : bench) {
        rows.push_back({std::to_string(r.d), format_double(r.mer_ms, 6),
                        format_double(r.toy_ms, 6), format_double(r.overhead, 6)});
    }
    emit(csv_to_string({"d", "mer_loss_grad_ms", "toy_fwd_bwd_ms", "overhead_fraction"}, rows),
         out_path);
    return kExitOk;
}

int cmd_robustness(const std::string& run_dir, const std::string& corruptions_csv,
                   const std::string& out_path) {
    const fs::path run(run_dir);
    ExperimentConfig cfg = experiment_config_from_kv(KvConfig::parse_file(run / "config.txt"));
    if (cfg.data_dir.empty()) throw ContractError("run config has no data_dir");
    DatasetBundle bundle = load_bundle(cfg.data_dir);
    FusionModel model = load_model(run / "model.bin");

    std::vector<Corruption> corruptions;
    if (corruptions_csv.empty()) {
        for (std::size_t m = 0; m < bundle.config.num_modalities; ++m) {
            corruptions.push_back({Corruption::Kind::Noise, m, 0.5});
            corruptions.push_back({Corruption::Kind::Noise, m, 1.0});
            corruptions.push_back({Corruption::Kind::Drop, m, 0.0});
        }
    } else {
        for (const std::string& tok : split_list(corruptions_csv)) {
            corruptions.push_back(parse_corruption(tok, bundle.config.num_modalities));
        }
    }

    const double clean =
        accuracy(model, bundle.target.modalities, bundle.target.labels);
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"clean", format_double(clean), format_double(0.0)});
    for (std::size_t i = 0; i < corruptions.size(); ++i) {
        SeededRng rng(derive_seed(cfg.train.seed, 300 + i));
        const double acc = corrupted_evaluate(model, bundle.target.modalities,
                                              bundle.target.labels, corruptions[i], rng);
        rows.push_back({corruption_name(corruptions[i]), format_double(acc),
                        format_double(clean - acc)});
    }
    emit(csv_to_string({"condition", "accuracy", "drop_from_clean"}, rows), out_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale laboratory for feature-entropy regularization of multimodal models"};
    app.require_subcommand(1);

    // grad-check
    auto* gc = app.add_subcommand("grad-check", "verify analytic gradients by finite differences");
    std::size_t gc_n = 16, gc_d = 8, gc_seeds = 20;
    double gc_step = 1e-5;
    gc->add_option("--n", gc_n, "batch rows");
    gc->add_option("--d", gc_d, "feature dims");
    gc->add_option("--seeds", gc_seeds, "number of seeds");
    gc->add_option("--step", gc_step, "central difference step");

    // losses
    auto* ls = app.add_subcommand("losses", "entropy-regularizer breakdown of a feature file");
    std::string ls_input;
    double ls_gamma = 1.0, ls_eps = 1e-4, ls_am = 1.0, ls_as = 1.0;
    ls->add_option("--input", ls_input, "feature file")->required();
    ls->add_option("--gamma", ls_gamma, "variance floor");
    ls->add_option("--eps", ls_eps, "stability constant");
    ls->add_option("--alpha-marg", ls_am, "marginal weight");
    ls->add_option("--alpha-spec", ls_as, "spectral weight");

    // diagnose
    auto* dg = app.add_subcommand("diagnose", "representation metrics for one or two feature files");
    std::string dg_a, dg_b, dg_la, dg_lb, dg_metrics = "rankme";
    std::uint64_t dg_seed = 0;
    dg->add_option("--a", dg_a, "first feature file")->required();
    dg->add_option("--b", dg_b, "second feature file")->required();
    dg->add_option("--labels-a", dg_la, "labels for the first file");
    dg->add_option("--labels-b", dg_lb, "labels for the second file");
    dg->add_option("--metrics", dg_metrics, "comma list: rankme,cka-linear,cka-rbf,procrustes");
    dg->add_option("--seed", dg_seed, "subsampling seed for class-conditional scores");

    // spectrum
    auto* sp = app.add_subcommand("spectrum", "log-normalized singular values as CSV");
    std::string sp_input, sp_out;
    sp->add_option("--input", sp_input, "feature file")->required();
    sp->add_option("--out", sp_out, "output CSV (default stdout)");

    // synth
    auto* sy = app.add_subcommand("synth", "generate a synthetic multimodal dataset");
    std::string sy_config, sy_out;
    sy->add_option("--config", sy_config, "generator config")->required();
    sy->add_option("--out", sy_out, "output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "train the late-fusion model and persist a run record");
    std::string tr_config, tr_data, tr_baseline, tr_out;
    bool tr_mer = false;
    tr->add_option("--config", tr_config, "training config")->required();
    tr->add_option("--data", tr_data, "dataset directory (overrides config data_dir)");
    tr->add_flag("--mer", tr_mer, "enable the entropy regularizer");
    tr->add_option("--baseline-reg", tr_baseline,
                   "none|dropout|feature_noise|weight_decay|label_smoothing");
    tr->add_option("--out", tr_out, "run directory")->required();

    // sweep
    auto* sw = app.add_subcommand("sweep", "one training run per regularizer value");
    std::string sw_param, sw_values, sw_config, sw_data, sw_out;
    sw->add_option("--param", sw_param, "lambda|alpha_marg|alpha_spec")->required();
    sw->add_option("--values", sw_values, "comma list of values")->required();
    sw->add_option("--config", sw_config, "training config")->required();
    sw->add_option("--data", sw_data, "dataset directory");
    sw->add_option("--out", sw_out, "output CSV (default stdout)");

    // bench
    auto* bc = app.add_subcommand("bench", "regularizer cost against a toy training step");
    std::size_t bc_n = 48;
    std::string bc_dlist = "256,512", bc_out;
    int bc_reps = 20;
    bc->add_option("--n", bc_n, "batch rows");
    bc->add_option("--d-list", bc_dlist, "comma list of feature dims");
    bc->add_option("--reps", bc_reps, "repetitions per measurement");
    bc->add_option("--out", bc_out, "output CSV (default stdout)");

    // robustness
    auto* rb = app.add_subcommand("robustness", "corruption robustness table for a run");
    std::string rb_run, rb_corruptions, rb_out;
    rb->add_option("--run", rb_run, "run directory")->required();
    rb->add_option("--corruptions", rb_corruptions,
                   "comma list like noise:m0:0.5,drop:m1 (default full grid)");
    rb->add_option("--out", rb_out, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitContract;
    }

    try {
        if (gc->parsed()) return cmd_grad_check(gc_n, gc_d, gc_seeds, gc_step);
        if (ls->parsed()) return cmd_losses(ls_input, ls_gamma, ls_eps, ls_am, ls_as);
        if (dg->parsed()) return cmd_diagnose(dg_a, dg_b, dg_la, dg_lb, dg_metrics, dg_seed);
        if (sp->parsed()) return cmd_spectrum(sp_input, sp_out);
        if (sy->parsed()) return cmd_synth(sy_config, sy_out);
        if (tr->parsed()) return cmd_train(tr_config, tr_data, tr_mer, tr_baseline, tr_out);
        if (sw->parsed()) return cmd_sweep(sw_param, sw_values, sw_config, sw_data, sw_out);
        if (bc->parsed()) return cmd_bench(bc_n, bc_dlist, bc_reps, bc_out);
        if (rb->parsed()) return cmd_robustness(rb_run, rb_corruptions, rb_out);
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitContract;
}
