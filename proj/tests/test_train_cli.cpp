// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lrvae/checkpoint.hpp"
#include "lrvae/io.hpp"
#include "lrvae/metrics.hpp"
#include "lrvae/train.hpp"
#include "support/testutil.hpp"

using namespace lrvae;

namespace {

cli::RunConfig smoke_config(const std::string& out_dir) {
    cli::RunConfig cfg;
    cfg.data = "synthetic";
    cfg.synthetic = "gaussian_mixture";
    cfg.synth_n = 512;
    cfg.synth_dim = 8;
    cfg.synth_k = 3;
    cfg.synth_spread = 2.0;
    cfg.latent_dim = 4;
    cfg.enc_hidden = "16";
    cfg.dec_hidden = "16";
    cfg.epochs = 2;
    cfg.batch_size = 64;
    cfg.beta = 1.0;
    cfg.alpha_T = 0.5;
    cfg.warmup_epochs = 2;
    cfg.seed = 3;
    cfg.out_dir = out_dir;
    return cfg;
}

int run_cli(const std::string& args, const std::string& log_path) {
    const std::string cmd = std::string(LRVAE_CLI_PATH) + " " + args + " > " + log_path +
                            " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// data rows of a CSV (comments and header skipped), split into cells
std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_SUITE_BEGIN("train_cli");

TEST_CASE("two-epoch smoke run decreases the total loss") {
    testutil::TempDir dir("smoke");
    cli::RunConfig cfg = smoke_config(dir.str());
    cfg.alpha_T = 0.0;  // fixed objective, so totals are comparable
    data::Dataset ds = cli::load_dataset(cfg);
    cli::TrainResult r = cli::train_model(cfg, ds.x);
    REQUIRE(r.epochs.size() == 2);
    CHECK(r.epochs[1].mean.total < r.epochs[0].mean.total);

    // with the LR term switched on, compare epochs trained at the same alpha
    cli::RunConfig cfg2 = smoke_config(dir.str());
    cfg2.alpha_T = 0.5;
    cfg2.warmup_epochs = 1;
    cfg2.epochs = 3;
    cli::TrainResult r2 = cli::train_model(cfg2, ds.x);
    CHECK(r2.epochs[1].mean.alpha_t == r2.epochs[2].mean.alpha_t);
    CHECK(r2.epochs[2].mean.total < r2.epochs[1].mean.total);
}

TEST_CASE("same config and seed give byte-identical checkpoints") {
    testutil::TempDir dir("det");
    cli::RunConfig cfg = smoke_config(dir.str());
    data::Dataset ds = cli::load_dataset(cfg);
    cli::TrainResult a = cli::train_model(cfg, ds.x);
    cli::TrainResult b = cli::train_model(cfg, ds.x);
    cli::checkpoint_save(a.model, cfg.epochs, dir.str() + "/a.lrv");
    cli::checkpoint_save(b.model, cfg.epochs, dir.str() + "/b.lrv");
    CHECK(io::read_file(dir.str() + "/a.lrv") == io::read_file(dir.str() + "/b.lrv"));
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
        CHECK(a.epochs[e].mean.total == b.epochs[e].mean.total);
        CHECK(a.epochs[e].mean.dr == b.epochs[e].mean.dr);
        CHECK(a.epochs[e].mean.kl == b.epochs[e].mean.kl);
        CHECK(a.epochs[e].mean.lr == b.epochs[e].mean.lr);
    }
}

TEST_CASE("cli train twice: metric CSVs identical apart from wall_seconds") {
    testutil::TempDir dir("cli_det");
    const std::string common =
        "train --data synthetic --synth_n 256 --synth_dim 6 --latent_dim 3 "
        "--enc_hidden 8 --dec_hidden 8 --epochs 2 --batch_size 64 --seed 11";
    CHECK(run_cli(common + " --out_dir " + dir.str() + "/r1", dir.str() + "/log1") == 0);
    CHECK(run_cli(common + " --out_dir " + dir.str() + "/r2", dir.str() + "/log2") == 0);
    auto r1 = csv_rows(dir.str() + "/r1/train_metrics.csv");
    auto r2 = csv_rows(dir.str() + "/r2/train_metrics.csv");
    REQUIRE(r1.size() == r2.size());
    REQUIRE(r1.size() == 2);
    for (std::size_t i = 0; i < r1.size(); ++i) {
        REQUIRE(r1[i].size() == 8);
        // all columns but the trailing wall_seconds must match exactly
        for (std::size_t j = 0; j + 1 < r1[i].size(); ++j) CHECK(r1[i][j] == r2[i][j]);
    }
    CHECK(io::read_file(dir.str() + "/r1/checkpoint.lrv") ==
          io::read_file(dir.str() + "/r2/checkpoint.lrv"));

    // provenance: every output embeds the config as comment lines
    const std::string csv = io::read_file(dir.str() + "/r1/train_metrics.csv");
    CHECK(csv.find("# seed=11") != std::string::npos);
    CHECK(csv.find("# beta=1") != std::string::npos);
}

TEST_CASE("cli train writes cadence checkpoints") {
    testutil::TempDir dir("cadence");
    CHECK(run_cli("train --data synthetic --synth_n 128 --synth_dim 4 --latent_dim 2 "
                  "--enc_hidden 4 --dec_hidden 4 --epochs 3 --batch_size 64 --seed 5 "
                  "--eval_cadence 1 --out_dir " +
                      dir.str(),
                  dir.str() + "/log") == 0);
    CHECK(std::filesystem::exists(dir.path() / "checkpoint_epoch1.lrv"));
    CHECK(std::filesystem::exists(dir.path() / "checkpoint_epoch2.lrv"));
    CHECK(std::filesystem::exists(dir.path() / "checkpoint.lrv"));
    // the cadence file is a loadable checkpoint at the right epoch
    auto lc = cli::checkpoint_load((dir.path() / "checkpoint_epoch2.lrv").string());
    CHECK(lc.epoch == 2);
}

TEST_CASE("cli eval reports AU=0 for a zero-weight encoder") {
    testutil::TempDir dir("evalzero");
    nn::ModelArch a;
    a.data_dim = 6;
    a.latent_dim = 3;
    a.enc_hidden = {4};
    a.dec_hidden = {4};
    a.likelihood = {nn::LikelihoodKind::gaussian, 1.0};
    nn::Model m = nn::init_model(a, 5);
    for (Tensor* p : m.params())
        for (std::size_t i = 0; i < p->size(); ++i) (*p)[i] = 0.0;
    cli::checkpoint_save(m, 0, dir.str() + "/zero.lrv");

    const int rc = run_cli("eval --checkpoint " + dir.str() +
                               "/zero.lrv --data synthetic --synth_n 64 --synth_dim 6 "
                               "--latent_dim 3 --out_dir " +
                               dir.str(),
                           dir.str() + "/log");
    CHECK(rc == 0);
    auto rows = csv_rows(dir.str() + "/eval_metrics.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0] == "64");          // n
    CHECK(rows[0][1] == "3");           // C
    CHECK(std::stod(rows[0][3]) == 0.0);  // au
}

TEST_CASE("cli probe on the linear toy checkpoint reports L = 2") {
    testutil::TempDir dir("probe");
    // D(z) = 2z, E(x) = x/2 on 2 dims
    nn::Model m;
    m.data_dim = 2;
    m.latent_dim = 2;
    m.likelihood = {nn::LikelihoodKind::gaussian, 1.0};
    nn::Layer dec;
    dec.spec = {2, 2, ActKind::none, 0.01};
    dec.w = Tensor({2, 2});
    dec.w(0, 0) = dec.w(1, 1) = 2.0;
    dec.b = Tensor({1, 2});
    m.decoder.push_back(dec);
    nn::Layer head;
    head.spec = {2, 2, ActKind::none, 0.01};
    head.w = Tensor({2, 2});
    head.w(0, 0) = head.w(1, 1) = 0.5;
    head.b = Tensor({1, 2});
    m.mu_head = head;
    for (std::size_t i = 0; i < head.w.size(); ++i) head.w[i] = 0.0;
    m.logvar_head = head;
    cli::checkpoint_save(m, 0, dir.str() + "/toy.lrv");

    const int rc = run_cli("probe --checkpoint " + dir.str() +
                               "/toy.lrv --data synthetic --synth_n 32 --synth_dim 2 "
                               "--n_probe_points 8 --collapse_bases 8 --seed 4 --out_dir " +
                               dir.str(),
                           dir.str() + "/log");
    CHECK(rc == 0);
    const std::string log = io::read_file(dir.str() + "/log");
    CHECK(log.find("L 2") != std::string::npos);
    CHECK(log.find("verdict") != std::string::npos);
    const bool verdict_ok = log.find("not_collapsed") != std::string::npos ||
                            log.find("collapsed") != std::string::npos;
    CHECK(verdict_ok);

    auto rows = csv_rows(dir.str() + "/bilip.csv");
    REQUIRE(rows.size() == 9);  // 8 points + summary
    CHECK(rows.back()[0] == "summary");
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(std::stod(rows[i][2]) == doctest::Approx(2.0));  // A
        CHECK(std::stod(rows[i][3]) <= 1e-12);                 // B
    }
    CHECK(csv_rows(dir.str() + "/collapse.csv").size() > 0);
}

TEST_CASE("cli noise-recon: zero scale reproduces the plain reconstruction") {
    testutil::TempDir dir("nr");
    // image dataset: 8 random 4x4 images
    Rng rng(6);
    Tensor imgs({8, 16});
    for (std::size_t i = 0; i < imgs.size(); ++i) imgs[i] = rng.uniform();
    data::save_idx_images(dir.str() + "/imgs.idx", imgs, 4, 4);

    nn::ModelArch a;
    a.data_dim = 16;
    a.latent_dim = 2;
    a.enc_hidden = {8};
    a.dec_hidden = {8};
    a.likelihood = {nn::LikelihoodKind::gaussian, 1.0};
    cli::checkpoint_save(nn::init_model(a, 9), 0, dir.str() + "/m.lrv");

    const int rc = run_cli("noise-recon --checkpoint " + dir.str() + "/m.lrv --data idx " +
                               "--idx_images " + dir.str() +
                               "/imgs.idx --noise_stddevs 0,0.5 --noise_samples 3 "
                               "--noise_inputs 0,2 --seed 12 --out_dir " +
                               dir.str(),
                           dir.str() + "/log");
    CHECK(rc == 0);
    auto rows = csv_rows(dir.str() + "/noise_diversity.csv");
    REQUIRE(rows.size() == 4);  // 2 inputs x 2 scales
    for (const auto& row : rows) {
        if (row[1] == "0") CHECK(std::stod(row[2]) == 0.0);  // diversity(0) = 0 exactly
        if (row[1] == "0.5") CHECK(std::stod(row[2]) > 0.0);
    }
    const std::string pgm = io::read_file(dir.str() + "/noise_recon.pgm");
    CHECK(pgm.rfind("P5\n# ", 0) == 0);                      // config comment block
    CHECK(pgm.find("\n24 8\n255\n") != std::string::npos);   // 2 scales x 3 samples x 4px
    CHECK(pgm.find("# seed=12") != std::string::npos);

    // non-image data is a contract error (distinct exit code)
    const int rc2 = run_cli("noise-recon --checkpoint " + dir.str() +
                                "/m.lrv --data synthetic --synth_n 8 --synth_dim 16 "
                                "--out_dir " +
                                dir.str(),
                            dir.str() + "/log2");
    CHECK(rc2 == exit_contract);
}

TEST_CASE("cli gen-synthetic and laplace-check run clean") {
    testutil::TempDir dir("gen");
    CHECK(run_cli("gen-synthetic --synth_n 32 --synth_dim 3 --out_dir " + dir.str(),
                  dir.str() + "/log") == 0);
    auto rows = csv_rows(dir.str() + "/synthetic.csv");
    CHECK(rows.size() == 32);
    REQUIRE(rows[0].size() == 3);

    CHECK(run_cli("laplace-check --seed 2", dir.str() + "/log2") == 0);
    const std::string log = io::read_file(dir.str() + "/log2");
    CHECK(log.find("corrected bound") != std::string::npos);
}

TEST_CASE("cli error exit codes are distinct per class") {
    testutil::TempDir dir("codes");
    CHECK(run_cli("eval --checkpoint /no/such/file --out_dir " + dir.str(),
                  dir.str() + "/l1") == exit_io);
    CHECK(run_cli("train --no_such_flag 1 --out_dir " + dir.str(), dir.str() + "/l2") ==
          exit_config);

    std::ofstream bad(dir.str() + "/bad.lrv", std::ios::binary);
    bad << "XXXXgarbage";
    bad.close();
    CHECK(run_cli("eval --checkpoint " + dir.str() + "/bad.lrv --out_dir " + dir.str(),
                  dir.str() + "/l3") == exit_format);
    CHECK(run_cli("frobnicate", dir.str() + "/l4") == exit_usage);
}

TEST_SUITE_END();
