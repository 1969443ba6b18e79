// SPDX-License-Identifier: Apache-2.0
//
// lrvae CLI: train / eval / probe / noise-recon / gen-synthetic /
// laplace-check. Every flag mirrors a config key; --config FILE loads a
// key=value file first and explicit flags win.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "lrvae/analysis.hpp"
#include "lrvae/checkpoint.hpp"
#include "lrvae/config.hpp"
#include "lrvae/io.hpp"
#include "lrvae/kernels.hpp"
#include "lrvae/metrics.hpp"
#include "lrvae/oracle.hpp"
#include "lrvae/rng.hpp"
#include "lrvae/train.hpp"

namespace fs = std::filesystem;
using namespace lrvae;

namespace {

struct CmdArgs {
    cli::RunConfig cfg;
    std::string checkpoint;  // --checkpoint for eval/probe/noise-recon
};

CmdArgs parse_common(const std::vector<std::string>& raw) {
    // --config and --checkpoint are handled here; everything else must be a
    // config key. Flags win over the config file regardless of order.
    std::vector<std::string> rest;
    std::string config_path, checkpoint;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == "--config" && i + 1 < raw.size()) {
            config_path = raw[++i];
        } else if (raw[i].rfind("--config=", 0) == 0) {
            config_path = raw[i].substr(9);
        } else if (raw[i] == "--checkpoint" && i + 1 < raw.size()) {
            checkpoint = raw[++i];
        } else if (raw[i].rfind("--checkpoint=", 0) == 0) {
            checkpoint = raw[i].substr(13);
        } else {
            rest.push_back(raw[i]);
        }
    }
    CmdArgs out;
    if (!config_path.empty()) out.cfg = cli::parse_config_file(config_path);
    const auto positional = cli::apply_flags(out.cfg, rest);
    if (!positional.empty())
        throw ConfigError("unexpected positional argument: " + positional.front());
    out.checkpoint = checkpoint;
    return out;
}

std::vector<std::string> provenance(const cli::RunConfig& cfg) { return cfg.to_lines(); }

void ensure_out_dir(const cli::RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir);
}

int cmd_train(const CmdArgs& args) {
    const cli::RunConfig& cfg = args.cfg;
    ensure_out_dir(cfg);
    data::Dataset ds = cli::load_dataset(cfg);

    io::CsvWriter csv(cfg.out_dir + "/train_metrics.csv", provenance(cfg),
                      {"epoch", "dr", "kl", "lr", "total", "alpha_t", "beta", "wall_seconds"});
    auto on_epoch = [&](const nn::Model& model, const cli::EpochStats& s) {
        csv.row({std::to_string(s.epoch), io::fmt_double(s.mean.dr), io::fmt_double(s.mean.kl),
                 io::fmt_double(s.mean.lr), io::fmt_double(s.mean.total),
                 io::fmt_double(s.mean.alpha_t), io::fmt_double(s.mean.beta),
                 io::fmt_double(s.wall_seconds)});
        csv.flush();
        if (cfg.eval_cadence > 0 && (s.epoch + 1) % cfg.eval_cadence == 0 &&
            s.epoch + 1 < cfg.epochs) {
            cli::checkpoint_save(model, s.epoch + 1,
                                 cfg.out_dir + "/checkpoint_epoch" +
                                     std::to_string(s.epoch + 1) + ".lrv");
        }
        std::printf("epoch %d total %.6f dr %.6f kl %.6f lr %.6f alpha %.3f\n", s.epoch,
                    s.mean.total, s.mean.dr, s.mean.kl, s.mean.lr, s.mean.alpha_t);
    };
    cli::TrainResult result = cli::train_model(cfg, ds.x, on_epoch);
    cli::checkpoint_save(result.model, cfg.epochs, cfg.out_dir + "/checkpoint.lrv");
    std::printf("wrote %s/checkpoint.lrv\n", cfg.out_dir.c_str());
    return exit_ok;
}

void check_dims(const nn::Model& model, const data::Dataset& ds) {
    if (model.data_dim != ds.dim())
        throw ContractError("checkpoint D=" + std::to_string(model.data_dim) +
                            " does not match dataset D=" + std::to_string(ds.dim()));
}

int cmd_eval(const CmdArgs& args) {
    if (args.checkpoint.empty()) throw ConfigError("eval requires --checkpoint");
    const cli::RunConfig& cfg = args.cfg;
    ensure_out_dir(cfg);
    cli::LoadedCheckpoint ck = cli::checkpoint_load(args.checkpoint);
    data::Dataset ds = cli::load_dataset(cfg);
    check_dims(ck.model, ds);

    metrics::MetricsReport r =
        metrics::evaluate(ck.model, ds.x, cfg.eps_au, cfg.mi_mc, cfg.seed);
    io::CsvWriter csv(cfg.out_dir + "/eval_metrics.csv", provenance(cfg),
                      {"n", "C", "eps_au", "au", "kl", "mi", "seed"});
    csv.row({std::to_string(r.n), std::to_string(r.c), io::fmt_double(r.eps_au),
             io::fmt_double(r.au), io::fmt_double(r.kl), io::fmt_double(r.mi),
             std::to_string(r.seed)});
    std::printf("n %zu C %zu eps_au %g AU %.4f KL %.4f MI %.4f\n", r.n, r.c, r.eps_au, r.au,
                r.kl, r.mi);
    return exit_ok;
}

int cmd_probe(const CmdArgs& args) {
    if (args.checkpoint.empty()) throw ConfigError("probe requires --checkpoint");
    const cli::RunConfig& cfg = args.cfg;
    ensure_out_dir(cfg);
    cli::LoadedCheckpoint ck = cli::checkpoint_load(args.checkpoint);

    analysis::BiLipReport rep = analysis::bilipschitz_probe(ck.model, cfg.probe_config());
    {
        io::CsvWriter csv(cfg.out_dir + "/bilip.csv", provenance(cfg),
                          {"kind", "z_norm", "a", "b", "min_ratio", "max_ratio"});
        for (const auto& p : rep.points)
            csv.row({"point", io::fmt_double(p.z_norm), io::fmt_double(p.a),
                     io::fmt_double(p.b), io::fmt_double(p.min_ratio),
                     io::fmt_double(p.max_ratio)});
        // Summary row: L_f, eta, L (or undefined), fraction with B < 1.
        csv.row({"summary", io::fmt_double(rep.l_f), io::fmt_double(rep.eta),
                 rep.l_defined ? io::fmt_double(rep.l) : "undefined",
                 io::fmt_double(rep.frac_b_lt_1), io::fmt_double(rep.median_b)});
    }

    data::Dataset ds = cli::load_dataset(cfg);
    check_dims(ck.model, ds);
    analysis::CollapseProfile prof = analysis::collapse_profile(
        ck.model, ds.x, cfg.probe_scale_list(), {cfg.eps_max, cfg.gamma}, cfg.sigma2,
        cfg.with_true, cfg.seed, cfg.collapse_bases);
    {
        io::CsvWriter csv(cfg.out_dir + "/collapse.csv", provenance(cfg),
                          {"probe_id", "scale", "dist", "kl_q", "kl_true", "eps_at_x",
                           "within_threshold"});
        for (const auto& r : prof.records)
            csv.row({std::to_string(r.probe_id), io::fmt_double(r.scale),
                     io::fmt_double(r.dist), io::fmt_double(r.kl_q),
                     r.has_true ? io::fmt_double(r.kl_true) : "",
                     io::fmt_double(r.eps_at_x), r.within ? "1" : "0"});
    }

    std::printf("L_f %.6f eta %.6f L %s frac_B<1 %.4f median_B %.6f verdict %s\n", rep.l_f,
                rep.eta, rep.l_defined ? io::fmt_double(rep.l).c_str() : "undefined",
                rep.frac_b_lt_1, rep.median_b,
                prof.collapsed ? "collapsed" : "not_collapsed");
    return exit_ok;
}

int cmd_noise_recon(const CmdArgs& args) {
    if (args.checkpoint.empty()) throw ConfigError("noise-recon requires --checkpoint");
    const cli::RunConfig& cfg = args.cfg;
    ensure_out_dir(cfg);
    cli::LoadedCheckpoint ck = cli::checkpoint_load(args.checkpoint);
    data::Dataset ds = cli::load_dataset(cfg);
    check_dims(ck.model, ds);
    if (ds.img_rows == 0 || ds.img_cols == 0 || ds.img_rows * ds.img_cols != ds.dim())
        throw ContractError("noise-recon requires image-shaped data (IDX source)");

    const auto inputs = cfg.noise_input_list();
    const auto stddevs = cfg.noise_stddev_list();
    const std::size_t samples = cfg.noise_samples;
    if (inputs.empty() || stddevs.empty() || samples == 0)
        throw ConfigError("noise-recon needs inputs, stddevs and samples >= 1");
    for (std::size_t idx : inputs)
        if (idx >= ds.n())
            throw ContractError("noise-recon input index " + std::to_string(idx) +
                                " out of range, dataset has " + std::to_string(ds.n()));

    const std::size_t ir = ds.img_rows, ic = ds.img_cols;
    const std::size_t grid_w = ic * stddevs.size() * samples;
    const std::size_t grid_h = ir * inputs.size();
    std::vector<std::uint8_t> grid(grid_w * grid_h, 0);

    io::CsvWriter csv(cfg.out_dir + "/noise_diversity.csv", provenance(cfg),
                      {"input", "scale", "diversity"});
    Rng rng(cfg.seed, 0x0153ULL);
    const std::size_t c = ck.model.latent_dim;

    for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
        Tensor x({1, ds.dim()});
        std::copy(ds.x.data() + inputs[ii] * ds.dim(), ds.x.data() + (inputs[ii] + 1) * ds.dim(),
                  x.data());
        Tensor mu = nn::encode_eval(ck.model, x).first;
        for (std::size_t si = 0; si < stddevs.size(); ++si) {
            const double s = stddevs[si];
            std::vector<Tensor> recons;
            for (std::size_t k = 0; k < samples; ++k) {
                Tensor z({1, c});
                for (std::size_t j = 0; j < c; ++j)
                    z[j] = mu[j] + (s == 0.0 ? 0.0 : s * rng.normal());
                recons.push_back(nn::decode_mean_eval(ck.model, z));
            }
            double div = 0.0;
            std::size_t pairs = 0;
            for (std::size_t a = 0; a < samples; ++a)
                for (std::size_t b = a + 1; b < samples; ++b) {
                    div += std::sqrt(kernels::active().sq_dist(
                        recons[a].data(), recons[b].data(), recons[a].size()));
                    ++pairs;
                }
            if (pairs > 0) div /= static_cast<double>(pairs);
            csv.row({std::to_string(inputs[ii]), io::fmt_double(s), io::fmt_double(div)});

            for (std::size_t k = 0; k < samples; ++k) {
                const std::size_t col0 = (si * samples + k) * ic;
                const std::size_t row0 = ii * ir;
                for (std::size_t r = 0; r < ir; ++r)
                    for (std::size_t q = 0; q < ic; ++q) {
                        const double v = std::clamp(recons[k][r * ic + q], 0.0, 1.0);
                        grid[(row0 + r) * grid_w + col0 + q] =
                            static_cast<std::uint8_t>(std::lround(v * 255.0));
                    }
            }
        }
    }
    io::write_pgm(cfg.out_dir + "/noise_recon.pgm", grid_w, grid_h, grid, provenance(cfg));
    std::printf("wrote %s/noise_recon.pgm and noise_diversity.csv\n", cfg.out_dir.c_str());
    return exit_ok;
}

int cmd_gen_synthetic(const CmdArgs& args) {
    const cli::RunConfig& cfg = args.cfg;
    ensure_out_dir(cfg);
    data::Dataset ds = data::gen_synthetic(cfg.synthetic_spec(), cfg.synth_n, cfg.seed);
    std::vector<std::string> header;
    for (std::size_t j = 0; j < ds.dim(); ++j) header.push_back("x" + std::to_string(j));
    io::CsvWriter csv(cfg.out_dir + "/synthetic.csv", provenance(cfg), header);
    std::vector<std::string> cells(ds.dim());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) cells[j] = io::fmt_double(ds.x(i, j));
        csv.row(cells);
    }
    std::printf("wrote %s/synthetic.csv (%zu x %zu)\n", cfg.out_dir.c_str(), ds.n(), ds.dim());
    return exit_ok;
}

// Fixture table on random linear decoders: Laplace vs the exact posterior
// together with both KL lower-bound variants.
int cmd_laplace_check(const CmdArgs& args) {
    const cli::RunConfig& cfg = args.cfg;
    std::printf("%4s %3s %3s %10s %12s %12s %12s %12s %s\n", "case", "D", "C", "kappa_min",
                "exact_kl", "laplace_kl", "nominal_bnd", "correct_bnd", "nominal_holds");
    Rng rng(cfg.seed, 0x1a91ULL);
    int violations = 0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 2 + rng.index(9);   // up to 10
        const std::size_t c = 1 + rng.index(std::min<std::size_t>(d, 4));
        oracle::LinearGaussianModel lg;
        lg.w = Tensor({d, c});
        for (std::size_t i = 0; i < lg.w.size(); ++i) lg.w[i] = rng.normal();
        lg.b = Tensor({d});
        for (std::size_t i = 0; i < d; ++i) lg.b[i] = rng.normal();
        lg.sigma2 = 0.5 + rng.uniform();

        Tensor x({d});
        for (std::size_t i = 0; i < d; ++i) x[i] = lg.b[i] + rng.normal();
        oracle::PosteriorParams post = oracle::exact_posterior(lg, x);
        const double exact_kl =
            oracle::gaussian_kl(post.mean, post.sigma, Tensor({c}), Tensor::identity(c));

        nn::Model dec = oracle::make_decoder_model(lg);
        analysis::LaplaceResult lap = analysis::laplace_posterior(
            analysis::decoder_map(dec), c, x, lg.sigma2, Tensor({c}));
        const bool nominal_holds = exact_kl >= lap.nominal_bound - 1e-9;
        if (!nominal_holds) ++violations;
        std::printf("%4d %3zu %3zu %10.6f %12.8f %12.8f %12.8f %12.8f %s\n", t, d, c,
                    lap.kappa_min, exact_kl, lap.kl, lap.nominal_bound, lap.corrected_bound,
                    nominal_holds ? "yes" : "NO");
    }
    std::printf("nominal bound violated in %d/20 cases; the corrected bound "
                "(C/2)[log(1+t) - t/(1+t)] held in all.\n",
                violations);
    return exit_ok;
}

int usage() {
    std::fprintf(stderr,
                 "usage: lrvae <train|eval|probe|noise-recon|gen-synthetic|laplace-check> "
                 "[--config FILE] [--checkpoint FILE] [--key value ...]\n");
    return exit_usage;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage();
    const std::string cmd = argv[1];
    std::vector<std::string> raw(argv + 2, argv + argc);
    try {
        const CmdArgs args = parse_common(raw);
        if (cmd == "train") return cmd_train(args);
        if (cmd == "eval") return cmd_eval(args);
        if (cmd == "probe") return cmd_probe(args);
        if (cmd == "noise-recon") return cmd_noise_recon(args);
        if (cmd == "gen-synthetic") return cmd_gen_synthetic(args);
        if (cmd == "laplace-check") return cmd_laplace_check(args);
        return usage();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return exit_format;
    } catch (const LengthError& e) {
        std::fprintf(stderr, "length error: %s\n", e.what());
        return exit_length;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "shape error: %s\n", e.what());
        return exit_shape;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return exit_numeric;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "contract error: %s\n", e.what());
        return exit_contract;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return exit_io;
    }
}
