#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "merdg/io.hpp"
#include "merdg/matrix.hpp"
#include "merdg/rng.hpp"

using namespace merdg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::path(MERDG_TEST_SCRATCH) / "cli";
    fs::create_directories(dir);
    return dir;
}

struct CliResult {
    int exit_code;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const fs::path out_file = scratch_dir() / "stdout.txt";
    const std::string cmd = std::string(MERDG_CLI_PATH) + " " + args + " > " +
                            out_file.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WEXITSTATUS(rc);
    result.out = read_text_file(out_file);
    return result;
}

double value_of(const std::string& text, const std::string& key) {
    const std::string needle = key + " = ";
    const std::size_t at = text.find(needle);
    REQUIRE(at != std::string::npos);
    const std::size_t end = text.find('\n', at);
    return parse_double(text.substr(at + needle.size(), end - at - needle.size()));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("losses command on hand fixtures") {
    const fs::path dir = scratch_dir();

    // Orthogonal +-1 columns: spectral loss is exactly -ln(1.0001).
    Matrix orth = Matrix::from_rows({{1, 1}, {-1, 1}, {1, -1}, {-1, -1}});
    write_feature_file(dir / "orth.feat", orth);
    CliResult r = run_cli("losses --input " + (dir / "orth.feat").string());
    CHECK(r.exit_code == 0);
    CHECK(value_of(r.out, "spectral_loss") ==
          doctest::Approx(-std::log(1.0001)).epsilon(1e-9));

    // Constant matrix: marginal loss 0.99 at the defaults.
    write_feature_file(dir / "const.feat", Matrix(6, 3, 2.0));
    CliResult c = run_cli("losses --input " + (dir / "const.feat").string());
    CHECK(c.exit_code == 0);
    CHECK(value_of(c.out, "marginal_loss") == doctest::Approx(0.99).epsilon(1e-12));

    // Corrupt magic: format error, exit 1.
    write_text_file(dir / "corrupt.feat", "XXXXXXXXrest");
    CliResult bad = run_cli("losses --input " + (dir / "corrupt.feat").string());
    CHECK(bad.exit_code == 1);
    CHECK(bad.out.find("byte offset 0") != std::string::npos);
}

TEST_CASE("diagnose command") {
    const fs::path dir = scratch_dir();
    SeededRng rng(4);
    Matrix f = gaussian_matrix(rng, 16, 5);
    write_feature_file(dir / "f.feat", f);

    CliResult same = run_cli("diagnose --a " + (dir / "f.feat").string() + " --b " +
                             (dir / "f.feat").string() + " --metrics cka-linear");
    CHECK(same.exit_code == 0);
    CHECK(value_of(same.out, "cka-linear") == doctest::Approx(1.0).epsilon(1e-9));

    // Rank-1 fixture.
    Matrix rank1(10, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 3; ++j) rank1(i, j) = static_cast<double>(i + 1);
    }
    write_feature_file(dir / "rank1.feat", rank1);
    CliResult rk = run_cli("diagnose --a " + (dir / "rank1.feat").string() + " --b " +
                           (dir / "rank1.feat").string() + " --metrics rankme");
    CHECK(rk.exit_code == 0);
    CHECK(value_of(rk.out, "rankme.a") == doctest::Approx(1.0).epsilon(1e-6));

    // Class-conditional request with only one label file is a usage error.
    write_label_file(dir / "labels.txt", std::vector<int>(16, 0));
    CliResult usage = run_cli("diagnose --a " + (dir / "f.feat").string() + " --b " +
                              (dir / "f.feat").string() +
                              " --metrics cka-linear --labels-a " +
                              (dir / "labels.txt").string());
    CHECK(usage.exit_code == 1);
}

TEST_CASE("spectrum command emits parseable CSV") {
    const fs::path dir = scratch_dir();
    Matrix two = Matrix::from_rows({{4, 0}, {0, 2}});
    write_feature_file(dir / "two.feat", two);
    const fs::path csv = dir / "spectrum.csv";
    CliResult r = run_cli("spectrum --input " + (dir / "two.feat").string() + " --out " +
                          csv.string());
    CHECK(r.exit_code == 0);
    auto rows = read_csv(csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "0");
    CHECK(parse_double(rows[1][1]) == 0.0);
    CHECK(parse_double(rows[2][1]) == doctest::Approx(-std::log(2.0)).epsilon(1e-9));

    // Zero matrix: degenerate, exit 2.
    write_feature_file(dir / "zero.feat", Matrix(4, 4));
    CliResult z = run_cli("spectrum --input " + (dir / "zero.feat").string());
    CHECK(z.exit_code == 2);
}

TEST_CASE("grad-check command") {
    CliResult bad_seeds = run_cli("grad-check --seeds 0");
    CHECK(bad_seeds.exit_code == 1);
    CHECK(bad_seeds.out.find("seed") != std::string::npos);

    // A huge step swamps the finite differences: expected failure, exit 2.
    CliResult big_step = run_cli("grad-check --n 8 --d 4 --seeds 2 --step 10");
    CHECK(big_step.exit_code == 2);
}

TEST_CASE("synth command rejects unknown keys and writes domains") {
    const fs::path dir = scratch_dir();
    write_text_file(dir / "synth_bad.txt", "samples_per_domain = 20\ngama = 1\n");
    CliResult bad = run_cli("synth --config " + (dir / "synth_bad.txt").string() + " --out " +
                            (dir / "ds_bad").string());
    CHECK(bad.exit_code == 1);
    CHECK(bad.out.find("gama") != std::string::npos);

    write_text_file(dir / "synth_ok.txt", "samples_per_domain = 24\nseed = 5\n");
    const fs::path ds = dir / "ds_ok";
    fs::remove_all(ds);
    CliResult ok = run_cli("synth --config " + (dir / "synth_ok.txt").string() + " --out " +
                           ds.string());
    CHECK(ok.exit_code == 0);
    std::size_t domain_dirs = 0;
    for (const auto& entry : fs::directory_iterator(ds)) {
        if (entry.is_directory() && entry.path().filename() != "generator") ++domain_dirs;
    }
    CHECK(domain_dirs == 3);  // two sources and one target
}

TEST_CASE("unknown subcommand and bad flags exit 1") {
    CHECK(run_cli("no-such-command").exit_code == 1);
    CHECK(run_cli("losses").exit_code == 1);  // missing required --input
}

TEST_CASE("class-conditional diagnose") {
    const fs::path dir = scratch_dir();
    SeededRng rng(14);
    Matrix f = gaussian_matrix(rng, 24, 4);
    write_feature_file(dir / "cc.feat", f);
    std::vector<int> labels(24);
    for (std::size_t i = 0; i < 24; ++i) labels[i] = static_cast<int>(i % 3);
    write_label_file(dir / "cc_labels.txt", labels);

    CliResult r = run_cli("diagnose --a " + (dir / "cc.feat").string() + " --b " +
                          (dir / "cc.feat").string() + " --labels-a " +
                          (dir / "cc_labels.txt").string() + " --labels-b " +
                          (dir / "cc_labels.txt").string() +
                          " --metrics procrustes --seed 3");
    CHECK(r.exit_code == 0);
    CHECK(value_of(r.out, "procrustes") == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.out.find("procrustes.class0") != std::string::npos);
    CHECK(r.out.find("procrustes.class2") != std::string::npos);
}

TEST_CASE("train, sweep and robustness surfaces") {
    const fs::path dir = scratch_dir() / "train_surface";
    fs::remove_all(dir);
    fs::create_directories(dir);

    write_text_file(dir / "synth.txt", "samples_per_domain = 100\nseed = 3\n");
    REQUIRE(run_cli("synth --config " + (dir / "synth.txt").string() + " --out " +
                    (dir / "ds").string())
                .exit_code == 0);

    write_text_file(dir / "train.txt",
                    "epochs = 3\nbatch_size = 24\nseed = 2\nencoder_hidden = 16\n"
                    "encoder_output_dim = 6\n");

    // Without --mer the regularizer columns are exactly zero.
    CliResult plain = run_cli("train --config " + (dir / "train.txt").string() + " --data " +
                              (dir / "ds").string() + " --out " + (dir / "run_plain").string());
    REQUIRE(plain.exit_code == 0);
    auto metrics = read_csv(dir / "run_plain" / "metrics.csv");
    REQUIRE(metrics.size() == 4);  // header + 3 epochs
    for (std::size_t i = 1; i < metrics.size(); ++i) {
        CHECK(parse_double(metrics[i][3]) == 0.0);
        CHECK(parse_double(metrics[i][4]) == 0.0);
    }

    // Sweep at lambda 0 equals the unregularized baseline accuracies.
    CliResult sweep = run_cli("sweep --param lambda --values 0 --config " +
                              (dir / "train.txt").string() + " --data " + (dir / "ds").string() +
                              " --out " + (dir / "sweep.csv").string());
    REQUIRE(sweep.exit_code == 0);
    auto sweep_rows = read_csv(dir / "sweep.csv");
    REQUIRE(sweep_rows.size() == 2);
    auto diag = KvConfig::parse_file(dir / "run_plain" / "diagnostics.txt");
    CHECK(parse_double(sweep_rows[1][1]) == diag.get_double("best_src_val_acc"));
    CHECK(parse_double(sweep_rows[1][2]) == diag.get_double("target_acc"));

    CHECK(run_cli("sweep --param lambda --values '' --config " + (dir / "train.txt").string() +
                  " --data " + (dir / "ds").string())
              .exit_code == 1);
    CHECK(run_cli("sweep --param gamma --values 1 --config " + (dir / "train.txt").string() +
                  " --data " + (dir / "ds").string())
              .exit_code == 1);

    // Unimodal comparison models requested through the config.
    write_text_file(dir / "train_uni.txt",
                    "epochs = 2\nbatch_size = 24\nseed = 2\nencoder_hidden = 16\n"
                    "encoder_output_dim = 6\ntrain_unimodal = true\n");
    CliResult uni = run_cli("train --config " + (dir / "train_uni.txt").string() + " --data " +
                            (dir / "ds").string() + " --out " + (dir / "run_uni").string());
    REQUIRE(uni.exit_code == 0);
    CHECK(fs::exists(dir / "run_uni" / "unimodal" / "metrics_m0.csv"));
    CHECK(fs::exists(dir / "run_uni" / "unimodal" / "metrics_m1.csv"));
    CHECK(fs::exists(dir / "run_uni" / "features" / "uni_enc0_target.feat"));
    CHECK(fs::exists(dir / "run_uni" / "features" / "uni_enc1_source_1.feat"));

    // Robustness layout: clean row with zero drop plus 2*(2+1) corruption rows.
    CliResult rob = run_cli("robustness --run " + (dir / "run_plain").string() + " --out " +
                            (dir / "rob.csv").string());
    REQUIRE(rob.exit_code == 0);
    auto rob_rows = read_csv(dir / "rob.csv");
    REQUIRE(rob_rows.size() == 8);  // header + clean + 6 conditions
    CHECK(rob_rows[1][0] == "clean");
    CHECK(parse_double(rob_rows[1][2]) == 0.0);
    CHECK(run_cli("robustness --run " + (dir / "run_plain").string() +
                  " --corruptions noise:m7:0.5")
              .exit_code == 1);
}

}  // TEST_SUITE
