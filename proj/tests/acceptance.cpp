// Acceptance suite: runs every criterion and prints one [PASS]/[FAIL] line
// each. Exits nonzero if any criterion fails. Pass criterion numbers as
// arguments to run a subset, e.g. `merdg_acceptance 7 8 9 10`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "merdg/checks.hpp"
#include "merdg/diagnostics.hpp"
#include "merdg/linalg.hpp"
#include "merdg/runner.hpp"

using namespace merdg;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name;
    if (!detail.empty()) std::cout << " | " << detail;
    std::cout << "\n" << std::flush;
    if (!pass) ++g_failures;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) { return format_double(v, 6); }

fs::path scratch_dir() {
    const fs::path dir = fs::path(MERDG_TEST_SCRATCH) / "acceptance";
    fs::create_directories(dir);
    return dir;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args, const std::string& tag) {
    const fs::path out_file = scratch_dir() / (tag + ".out");
    const std::string cmd = std::string(MERDG_CLI_PATH) + " " + args + " > " +
                            out_file.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WEXITSTATUS(rc);
    result.out = read_text_file(out_file);
    return result;
}

Matrix random_spd(SeededRng& rng, std::size_t d) {
    Matrix g = gaussian_matrix(rng, d, d);
    Matrix s = matmul(g, g.transpose());
    s *= 1.0 / static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) s(i, i) += 0.5;
    return s;
}

Matrix random_orthogonal(SeededRng& rng, std::size_t d) {
    Matrix q = gaussian_matrix(rng, d, d);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += q(i, j) * q(i, k);
            for (std::size_t i = 0; i < d; ++i) q(i, j) -= dot * q(i, k);
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < d; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < d; ++i) q(i, j) /= nrm;
    }
    return q;
}

// ---------------------------------------------------------------------------
// Criteria 1-6: numerics.
// ---------------------------------------------------------------------------

void criterion_1() {
    const double start = now_seconds();
    CliResult r = run_cli("grad-check", "grad_check");
    const double elapsed = now_seconds() - start;
    const bool pass = r.exit_code == 0 && elapsed < 5.0;
    report(1, "gradient oracle (grad-check, 20 seeds, step 1e-5)", pass,
           "exit=" + std::to_string(r.exit_code) + " time=" + fmt(elapsed) + "s");
}

void criterion_2() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SeededRng rng(seed);
        const std::size_t d = 2 + rng.next_below(63);
        Matrix s = random_spd(rng, d);
        const double chol = cholesky_logdet(s).logdet;
        double eig_sum = 0.0;
        for (double v : sym_eigenvalues(s)) eig_sum += std::log(v);
        worst = std::max(worst, std::fabs(chol - eig_sum));
    }
    report(2, "log-det equivalence over 50 random PD matrices", worst < 1e-8,
           "worst |diff|=" + fmt(worst));
}

void criterion_3() {
    const double bound = -std::log(1.0 + 1e-4);
    bool bound_ok = true;
    double worst_margin = 1e300;
    SeededRng rng(3);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 4 + rng.next_below(28);
        const std::size_t d = 1 + rng.next_below(8);
        Matrix z = gaussian_matrix(rng, n, d);
        z *= (0.05 + 3.0 * rng.next_real());
        const double loss = spectral_loss(z, 1e-4).loss;
        worst_margin = std::min(worst_margin, loss - bound);
        if (loss < bound - 1e-12) bound_ok = false;
    }
    Matrix orth = Matrix::from_rows({{1, 1}, {-1, 1}, {1, -1}, {-1, -1}});
    const double identity_loss = spectral_loss(orth, 1e-4).loss;
    const double identity_err = std::fabs(identity_loss - (-std::log(1.0001)));
    const bool pass = bound_ok && identity_err < 1e-9;
    report(3, "spectral bound and identity fixture", pass,
           "min margin=" + fmt(worst_margin) + " identity |err|=" + fmt(identity_err));
}

void criterion_4() {
    Matrix constant(8, 5, 2.5);
    const double collapsed = marginal_loss(constant, 1.0, 1e-4).loss;
    // Hand arithmetic for {0, 0.2}: unbiased variance 0.02, sigma = sqrt(0.0201).
    Matrix pair = Matrix::from_rows({{0.0}, {0.2}});
    const double small = marginal_loss(pair, 1.0, 1e-4).loss;
    const double expected = 1.0 - std::sqrt(0.0201);
    const bool pass = std::fabs(collapsed - 0.99) < 1e-12 && std::fabs(small - expected) < 1e-6;
    report(4, "marginal-loss fixtures (0.99 and 1-sqrt(0.0201))", pass,
           "constant=" + fmt(collapsed) + " pair=" + format_double(small, 9) + " expected=" +
               format_double(expected, 9));
}

void criterion_5() {
    Matrix uniform(6, 5);
    for (std::size_t i = 0; i < 5; ++i) uniform(i, i) = 3.0;  // rank 5, equal spectrum
    const double r_uniform = rankme(uniform);

    Matrix two_one = Matrix::from_rows({{2, 0}, {0, 1}});
    const double r21 = rankme(two_one);

    bool bounds_ok = true;
    SeededRng rng(5);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 3 + rng.next_below(20);
        const std::size_t d = 2 + rng.next_below(10);
        Matrix z = gaussian_matrix(rng, n, d);
        const double r = rankme(z);
        if (r < 1.0 - 1e-12 || r > static_cast<double>(std::min(n, d)) + 1e-9) bounds_ok = false;
    }
    const bool pass =
        std::fabs(r_uniform - 5.0) < 1e-9 && std::fabs(r21 - 1.88988) < 1e-4 && bounds_ok;
    report(5, "rankme exactness and bounds", pass,
           "uniform=" + format_double(r_uniform, 12) + " {2,1}=" + format_double(r21, 7));
}

void criterion_6() {
    SeededRng rng(6);
    Matrix x = gaussian_matrix(rng, 24, 6);
    Matrix q = random_orthogonal(rng, 6);
    Matrix y_rot = matmul(x, q);
    Matrix y_scaled = x;
    y_scaled *= 4.2;
    Matrix other = gaussian_matrix(rng, 24, 5);

    const double cka_rot = std::fabs(cka_linear(x, y_rot) - 1.0);
    const double cka_scale = std::fabs(cka_linear(x, y_scaled) - 1.0);
    const double pro_rot = std::fabs(procrustes_similarity(x, y_rot) - 1.0);
    const double pro_scale = std::fabs(procrustes_similarity(x, y_scaled) - 1.0);
    const double sym = std::fabs(cka_linear(x, other) - cka_linear(other, x));
    const bool pass = cka_rot < 1e-8 && cka_scale < 1e-8 && pro_rot < 1e-8 && pro_scale < 1e-8 &&
                      sym < 1e-12;
    report(6, "metric invariances (orthogonal, scaling, symmetry)", pass,
           "cka_rot=" + fmt(cka_rot) + " pro_rot=" + fmt(pro_rot) + " sym=" + fmt(sym));
}

// ---------------------------------------------------------------------------
// Criteria 7-10: the five-seed fusion-overfitting experiment.
// ---------------------------------------------------------------------------

struct SeedOutcome {
    double fusion_tgt = 0.0, mer_tgt = 0.0;
    std::vector<double> uni_probe_tgt, fusion_probe_tgt, mer_probe_tgt;
    std::vector<double> fusion_rankme, mer_rankme;
    std::vector<double> fusion_domain, mer_domain;
    std::vector<double> fusion_drops, mer_drops;  // 6 corruption conditions
    std::vector<std::string> condition_names;
};

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median5(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

SeedOutcome run_experiment_seed(int s, bool verbose) {
    const double t0 = now_seconds();
    SynthConfig synth;  // shipped defaults
    synth.seed = 101 + static_cast<std::uint64_t>(s);
    DatasetBundle bundle = generate(synth);

    const ExperimentConfig shipped;  // default encoder widths
    ModelDims dims;
    dims.input_dims = synth.input_dims;
    dims.hidden = shipped.encoder_hidden;
    dims.encoder_out = shipped.encoder_out;
    dims.num_classes = synth.num_classes;

    TrainConfig tc;  // shipped defaults: lr 1e-3, batch 48, epochs 100
    tc.seed = 501 + static_cast<std::uint64_t>(s);

    const std::uint64_t init_seed = derive_seed(tc.seed, 0);
    TrainOutput fusion = train(init_model(dims, init_seed), bundle, tc);

    TrainConfig tm = tc;
    tm.mer = MerConfig{};  // shipped regularizer defaults
    TrainOutput mer = train(init_model(dims, init_seed), bundle, tm);

    const std::size_t m_count = synth.num_modalities;
    std::vector<TrainOutput> unimodal;
    for (std::size_t m = 0; m < m_count; ++m) {
        DatasetBundle restricted = restrict_to_modality(bundle, m);
        ModelDims uni_dims = dims;
        uni_dims.input_dims = {synth.input_dims[m]};
        unimodal.push_back(
            train(init_model(uni_dims, derive_seed(tc.seed, 10 + m)), restricted, tc));
    }

    SeedOutcome out;
    out.fusion_tgt = accuracy(fusion.best_model, bundle.target.modalities, bundle.target.labels);
    out.mer_tgt = accuracy(mer.best_model, bundle.target.modalities, bundle.target.labels);

    PooledData pooled = pool_domains(bundle.sources);
    ForwardResult fusion_src = forward(fusion.best_model, pooled.inputs);
    ForwardResult fusion_tgt_f = forward(fusion.best_model, bundle.target.modalities);
    ForwardResult mer_src = forward(mer.best_model, pooled.inputs);
    ForwardResult mer_tgt_f = forward(mer.best_model, bundle.target.modalities);

    for (std::size_t m = 0; m < m_count; ++m) {
        DatasetBundle restricted = restrict_to_modality(bundle, m);
        PooledData uni_pooled = pool_domains(restricted.sources);
        ForwardResult uni_src = forward(unimodal[m].best_model, uni_pooled.inputs);
        ForwardResult uni_tgt = forward(unimodal[m].best_model, restricted.target.modalities);

        // Probe target accuracies averaged over five probe splits; the split
        // draw adds about a point of jitter otherwise.
        auto averaged_probe = [&](const Matrix& src_f, const std::vector<int>& src_y,
                                  const Matrix& tgt_f) {
            double total = 0.0;
            for (std::uint64_t rep = 0; rep < 5; ++rep) {
                SeededRng pr(derive_seed(tc.seed, 400 + m + 1000 * rep));
                total += standalone_probe(src_f, src_y, tgt_f, bundle.target.labels,
                                          synth.num_classes, pr)
                             .target_acc;
            }
            return total / 5.0;
        };
        out.uni_probe_tgt.push_back(
            averaged_probe(uni_src.encoder_outputs[0], uni_pooled.labels,
                           uni_tgt.encoder_outputs[0]));
        out.fusion_probe_tgt.push_back(
            averaged_probe(fusion_src.encoder_outputs[m], pooled.labels,
                           fusion_tgt_f.encoder_outputs[m]));
        out.mer_probe_tgt.push_back(
            averaged_probe(mer_src.encoder_outputs[m], pooled.labels,
                           mer_tgt_f.encoder_outputs[m]));

        out.fusion_rankme.push_back(rankme(fusion_tgt_f.encoder_outputs[m]));
        out.mer_rankme.push_back(rankme(mer_tgt_f.encoder_outputs[m]));

        std::vector<Matrix> fusion_by_domain, mer_by_domain;
        for (const DomainData* dom : bundle.all_domains()) {
            fusion_by_domain.push_back(forward(fusion.best_model, dom->modalities)
                                           .encoder_outputs[m]);
            mer_by_domain.push_back(forward(mer.best_model, dom->modalities)
                                        .encoder_outputs[m]);
        }
        double fusion_dom = 0.0, mer_dom = 0.0;
        for (std::uint64_t rep = 0; rep < 5; ++rep) {
            SeededRng dr1(derive_seed(tc.seed, 500 + m + 1000 * rep));
            SeededRng dr2(derive_seed(tc.seed, 500 + m + 1000 * rep));
            fusion_dom += domain_probe(fusion_by_domain, dr1).accuracy;
            mer_dom += domain_probe(mer_by_domain, dr2).accuracy;
        }
        out.fusion_domain.push_back(fusion_dom / 5.0);
        out.mer_domain.push_back(mer_dom / 5.0);
    }

    // Six corruption conditions, paired noise seeds across the two models.
    std::vector<Corruption> conditions;
    for (std::size_t m = 0; m < m_count; ++m) {
        conditions.push_back({Corruption::Kind::Noise, m, 0.5});
        conditions.push_back({Corruption::Kind::Noise, m, 1.0});
        conditions.push_back({Corruption::Kind::Drop, m, 0.0});
    }
    for (std::size_t c = 0; c < conditions.size(); ++c) {
        SeededRng nr1(derive_seed(tc.seed, 600 + c));
        SeededRng nr2(derive_seed(tc.seed, 600 + c));
        const double fa = corrupted_evaluate(fusion.best_model, bundle.target.modalities,
                                             bundle.target.labels, conditions[c], nr1);
        const double ma = corrupted_evaluate(mer.best_model, bundle.target.modalities,
                                             bundle.target.labels, conditions[c], nr2);
        out.fusion_drops.push_back(out.fusion_tgt - fa);
        out.mer_drops.push_back(out.mer_tgt - ma);
        out.condition_names.push_back(corruption_name(conditions[c]));
    }

    if (verbose) {
        std::cerr << "  seed " << s << ": fusion_tgt=" << fmt(out.fusion_tgt)
                  << " mer_tgt=" << fmt(out.mer_tgt)
                  << " uni_probe=" << fmt(mean(out.uni_probe_tgt))
                  << " fusion_probe=" << fmt(mean(out.fusion_probe_tgt))
                  << " mer_probe=" << fmt(mean(out.mer_probe_tgt))
                  << " rank(f/m)=" << fmt(mean(out.fusion_rankme)) << "/"
                  << fmt(mean(out.mer_rankme))
                  << " dom(f/m)=" << fmt(mean(out.fusion_domain)) << "/"
                  << fmt(mean(out.mer_domain)) << " (" << fmt(now_seconds() - t0) << "s)\n";
    }
    return out;
}

void criteria_7_to_10(const std::set<int>& wanted, bool verbose) {
    const bool need = wanted.empty() || wanted.count(7) || wanted.count(8) || wanted.count(9) ||
                      wanted.count(10);
    if (!need) return;

    const double start = now_seconds();
    std::vector<SeedOutcome> seeds;
    for (int s = 0; s < 5; ++s) seeds.push_back(run_experiment_seed(s, verbose));
    const double elapsed = now_seconds() - start;

    int pass7 = 0, pass8 = 0, pass9 = 0;
    for (const SeedOutcome& o : seeds) {
        const double gap = mean(o.uni_probe_tgt) - mean(o.fusion_probe_tgt);
        const bool a = gap >= 0.02;
        const bool b = o.mer_tgt - o.fusion_tgt >= 0.02;
        const bool c = mean(o.mer_probe_tgt) - mean(o.fusion_probe_tgt) >= 0.5 * gap;
        if (a && b && c) ++pass7;
        if (mean(o.mer_rankme) > mean(o.fusion_rankme)) ++pass8;
        if (mean(o.mer_domain) <= mean(o.fusion_domain)) ++pass9;
    }

    std::size_t pass10 = 0;
    const std::size_t n_cond = seeds[0].fusion_drops.size();
    std::string cond_detail;
    for (std::size_t c = 0; c < n_cond; ++c) {
        std::vector<double> fd, md;
        for (const SeedOutcome& o : seeds) {
            fd.push_back(o.fusion_drops[c]);
            md.push_back(o.mer_drops[c]);
        }
        const double f_med = median5(fd);
        const double m_med = median5(md);
        if (m_med <= f_med) ++pass10;
        cond_detail += seeds[0].condition_names[c] + "=" + fmt(m_med) + "/" + fmt(f_med) + " ";
    }

    if (wanted.empty() || wanted.count(7)) {
        report(7, "fusion overfitting reproduction (probe gap, +2pt target, 50% recovery)",
               pass7 >= 4 && elapsed < 600.0,
               std::to_string(pass7) + "/5 seeds, runtime=" + fmt(elapsed) + "s");
    }
    if (wanted.empty() || wanted.count(8)) {
        report(8, "rank restoration on target features", pass8 >= 4,
               std::to_string(pass8) + "/5 seeds");
    }
    if (wanted.empty() || wanted.count(9)) {
        report(9, "domain-probe accuracy does not increase under the regularizer", pass9 >= 4,
               std::to_string(pass9) + "/5 seeds");
    }
    if (wanted.empty() || wanted.count(10)) {
        report(10, "corruption drops no larger in >= 4 of 6 conditions (mer/fusion medians)",
               pass10 >= 4, std::to_string(pass10) + "/6 conditions: " + cond_detail);
    }
}

// ---------------------------------------------------------------------------
// Criteria 11-13.
// ---------------------------------------------------------------------------

void criterion_11() {
    MerConfig cfg;
    const bool pass = cfg.lambda == 3.0 && cfg.alpha_marg == 1.0 && cfg.alpha_spec == 1.0 &&
                      cfg.gamma == 1.0 && cfg.eps == 1e-4;
    report(11, "regularizer defaults (lambda 3, alphas 1, gamma 1, eps 1e-4)", pass, "");
}

void criterion_12() {
    SeededRng rng(12);
    Matrix z = gaussian_matrix(rng, 48, 2304);
    const double start = now_seconds();
    auto [breakdown, grad] = mer_loss_grad(z, MerConfig{});
    const double elapsed = now_seconds() - start;
    const bool time_ok = elapsed < 2.0 && grad.rows() == 48;

    CliResult bench = run_cli("bench --n 48 --d-list 256,512 --reps 20 --out " +
                                  (scratch_dir() / "bench.csv").string(),
                              "bench");
    bool ratio_ok = false;
    double ratio = 0.0;
    if (bench.exit_code == 0) {
        auto rows = read_csv(scratch_dir() / "bench.csv");
        if (rows.size() == 3) {
            const double t256 = parse_double(rows[1][1]);
            const double t512 = parse_double(rows[2][1]);
            ratio = t256 > 0.0 ? t512 / t256 : 0.0;
            ratio_ok = ratio >= 4.0 && ratio <= 10.0;
        }
    }
    report(12, "performance envelope (48x2304 < 2 s; 256->512 scaling in [4,10])",
           time_ok && ratio_ok, "time=" + fmt(elapsed) + "s ratio=" + fmt(ratio));
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
    return read_text_file(a) == read_text_file(b);
}

bool same_tree_bytes(const fs::path& a, const fs::path& b, std::string& diff) {
    std::vector<fs::path> rel;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), a));
    }
    std::sort(rel.begin(), rel.end());
    for (const fs::path& r : rel) {
        if (!fs::exists(b / r)) {
            diff = "missing " + r.string();
            return false;
        }
        if (!same_file_bytes(a / r, b / r)) {
            diff = "differs " + r.string();
            return false;
        }
    }
    return true;
}

void criterion_13() {
    const fs::path dir = scratch_dir() / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // Small but complete configuration so train runs in seconds.
    write_text_file(dir / "synth.txt", "samples_per_domain = 120\nseed = 9\n");
    write_text_file(dir / "train.txt",
                    "epochs = 5\nbatch_size = 24\nseed = 4\nencoder_hidden = 16\n"
                    "encoder_output_dim = 8\n");

    std::string detail;
    bool pass = true;

    CliResult s1 = run_cli("synth --config " + (dir / "synth.txt").string() + " --out " +
                               (dir / "ds1").string(),
                           "synth1");
    CliResult s2 = run_cli("synth --config " + (dir / "synth.txt").string() + " --out " +
                               (dir / "ds2").string(),
                           "synth2");
    if (s1.exit_code != 0 || s2.exit_code != 0) {
        pass = false;
        detail = "synth failed";
    } else if (!same_tree_bytes(dir / "ds1", dir / "ds2", detail)) {
        pass = false;
        detail = "synth " + detail;
    }

    if (pass) {
        const std::string base = "train --config " + (dir / "train.txt").string() + " --data " +
                                 (dir / "ds1").string() + " --mer --out ";
        CliResult t1 = run_cli(base + (dir / "run1").string(), "train1");
        CliResult t2 = run_cli(base + (dir / "run2").string(), "train2");
        if (t1.exit_code != 0 || t2.exit_code != 0) {
            pass = false;
            detail = "train failed: " + t1.out;
        } else if (!same_tree_bytes(dir / "run1", dir / "run2", detail)) {
            pass = false;
            detail = "train " + detail;
        }
    }

    if (pass) {
        const std::string feat = (dir / "ds1" / "target" / "modality_0.feat").string();
        CliResult l1 = run_cli("losses --input " + feat, "losses1");
        CliResult l2 = run_cli("losses --input " + feat, "losses2");
        CliResult p1 = run_cli("spectrum --input " + feat, "spec1");
        CliResult p2 = run_cli("spectrum --input " + feat, "spec2");
        CliResult d1 = run_cli("diagnose --a " + feat + " --b " + feat +
                                   " --metrics rankme,cka-linear,procrustes",
                               "diag1");
        CliResult d2 = run_cli("diagnose --a " + feat + " --b " + feat +
                                   " --metrics rankme,cka-linear,procrustes",
                               "diag2");
        CliResult r1 = run_cli("robustness --run " + (dir / "run1").string(), "rob1");
        CliResult r2 = run_cli("robustness --run " + (dir / "run1").string(), "rob2");
        CliResult r3 = run_cli("robustness --run " + (dir / "run2").string(), "rob3");
        CliResult g1 = run_cli("grad-check --n 8 --d 4 --seeds 3", "gc1");
        CliResult g2 = run_cli("grad-check --n 8 --d 4 --seeds 3", "gc2");
        if (l1.out != l2.out || p1.out != p2.out || d1.out != d2.out || r1.out != r2.out ||
            r1.out != r3.out || g1.out != g2.out || l1.exit_code != 0 || p1.exit_code != 0 ||
            d1.exit_code != 0 || r1.exit_code != 0 || g1.exit_code != 0) {
            pass = false;
            detail = "command output differs across reruns";
        }
    }

    report(13, "determinism (synth, train, losses, spectrum, diagnose, robustness, grad-check)",
           pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    bool verbose = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "-v") {
            verbose = true;
        } else {
            wanted.insert(std::atoi(arg.c_str()));
        }
    }
    auto want = [&wanted](int id) { return wanted.empty() || wanted.count(id) > 0; };

    if (want(1)) criterion_1();
    if (want(2)) criterion_2();
    if (want(3)) criterion_3();
    if (want(4)) criterion_4();
    if (want(5)) criterion_5();
    if (want(6)) criterion_6();
    criteria_7_to_10(wanted, verbose);
    if (want(11)) criterion_11();
    if (want(12)) criterion_12();
    if (want(13)) criterion_13();

    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
