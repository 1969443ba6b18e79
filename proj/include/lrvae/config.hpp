// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lrvae/analysis.hpp"
#include "lrvae/data.hpp"
#include "lrvae/nn.hpp"
#include "lrvae/objectives.hpp"

namespace lrvae::cli {

// Every field is a `key=value` config line and a same-named `--key value`
// flag (flag wins). The full config is serialized verbatim into every output
// file for provenance.
struct RunConfig {
    // data source
    std::string data = "synthetic";  // "idx" | "synthetic"
    std::string idx_images;
    std::string idx_labels;
    std::string synthetic = "gaussian_mixture";  // | "pinwheel"
    std::size_t synth_n = 2048;
    std::size_t synth_dim = 8;
    std::size_t synth_k = 4;
    std::size_t synth_arms = 5;
    double synth_scale = 1.0;
    double synth_spread = 4.0;
    std::size_t n_limit = 0;  // 0 = use all rows

    // model
    std::size_t latent_dim = 32;
    std::string enc_hidden = "256,128";
    std::string dec_hidden = "128,256";
    std::string activation = "leaky_relu";
    double leaky_slope = 0.01;
    std::string likelihood = "gaussian";
    double sigma2 = 1.0;
    bool binarize = false;  // threshold pixels at 0.5 (bernoulli realism)

    // objective
    double beta = 1.0;
    double alpha_T = 0.0;
    int warmup_epochs = 10;
    std::string schedule = "linear";
    std::string lr_z_source = "posterior";

    // training
    int epochs = 30;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    int eval_cadence = 10;

    // metrics
    double eps_au = 0.01;
    std::size_t mi_mc = 1;

    // probes
    double zeta = 0.05;
    double varrho = 0.1;
    double ball_radius = 0.1;
    std::size_t n_probe_points = 64;
    std::size_t n_pairs_per_ball = 4;
    double power_iter_tol = 1e-10;
    double tau_r = 0.0;
    double tau_l = 0.0;
    std::string probe_scales = "0.5,1.0,2.0";
    double eps_max = 0.1;
    double gamma = 1.0;
    bool with_true = false;
    std::size_t collapse_bases = 64;

    // noise reconstruction
    std::string noise_stddevs = "0,0.2,0.4,0.6,0.8,1.0";
    std::size_t noise_samples = 8;
    std::string noise_inputs = "0,1,2,3";

    std::string out_dir = "out";

    // Derived views.
    nn::ModelArch arch(std::size_t data_dim) const;
    objectives::LossWeights loss_weights() const;
    analysis::ProbeConfig probe_config() const;
    data::SyntheticSpec synthetic_spec() const;
    std::vector<double> probe_scale_list() const;
    std::vector<double> noise_stddev_list() const;
    std::vector<std::size_t> noise_input_list() const;

    // Canonical `key=value` lines in fixed order.
    std::vector<std::string> to_lines() const;
};

// key=value lines, '#' comments, blank lines ignored. Unknown keys are
// config errors.
RunConfig parse_config_file(const std::string& path, RunConfig base = {});
// --key value / --key=value pairs; keys match config keys. Returns leftover
// positional arguments.
std::vector<std::string> apply_flags(RunConfig& cfg, const std::vector<std::string>& args);
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

std::vector<std::size_t> parse_size_list(const std::string& s);
std::vector<double> parse_double_list(const std::string& s);

}  // namespace lrvae::cli
