// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lrvae/tape.hpp"
#include "lrvae/tensor.hpp"

namespace lrvae::nn {

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    ActKind act = ActKind::none;
    double leaky_slope = 0.01;
};

struct Layer {
    LayerSpec spec;
    Tensor w;  // [in_dim x out_dim], row-major
    Tensor b;  // [1 x out_dim]
};

enum class LikelihoodKind { gaussian, bernoulli };

struct Likelihood {
    LikelihoodKind kind = LikelihoodKind::gaussian;
    double sigma2 = 1.0;
};

const char* likelihood_name(LikelihoodKind k);
LikelihoodKind likelihood_from_name(const std::string& name);

// Encoder trunk + mu/logvar heads + decoder. Heads share the trunk output
// width; decoder ends at data_dim with no final activation (logits for the
// bernoulli likelihood, mean for the gaussian one).
struct Model {
    std::vector<Layer> encoder_trunk;
    Layer mu_head;
    Layer logvar_head;
    std::vector<Layer> decoder;
    std::size_t latent_dim = 0;
    std::size_t data_dim = 0;
    Likelihood likelihood;

    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    std::size_t param_count() const;
};

struct ModelArch {
    std::size_t data_dim = 0;
    std::size_t latent_dim = 0;
    std::vector<std::size_t> enc_hidden;  // trunk widths, may be empty
    std::vector<std::size_t> dec_hidden;
    ActKind act = ActKind::leaky_relu;
    double leaky_slope = 0.01;
    Likelihood likelihood;
};

// He init (variance 2/fan_in) for relu/leaky layers, 1/fan_in otherwise;
// biases zero. Deterministic per seed.
Model init_model(const ModelArch& arch, std::uint64_t seed);

// logvar is clamped to this range before any exponentiation.
inline constexpr double kLogvarClampLo = -10.0;
inline constexpr double kLogvarClampHi = 10.0;

// Tape-bound view of a model; Vars are leaves on the given tape in the same
// order as Model::params().
struct BoundLayer {
    Var w, b;
    LayerSpec spec;
};

struct BoundModel {
    std::vector<BoundLayer> trunk;
    BoundLayer mu;
    BoundLayer logvar;
    std::vector<BoundLayer> decoder;
    const Model* model = nullptr;

    std::vector<Var> param_vars() const;
};

BoundModel bind(Tape& tape, const Model& model);

Var affine(Tape& tape, const BoundLayer& layer, Var x);
Var forward_layers(Tape& tape, const std::vector<BoundLayer>& layers, Var x);

// (mu, logvar); logvar already clamped. Shape error if x width != data_dim.
std::pair<Var, Var> encode(Tape& tape, const BoundModel& m, Var x);
// Decoder mean (gaussian) or logits (bernoulli). Shape error on width.
Var decode(Tape& tape, const BoundModel& m, Var z);
// z = mu + exp(logvar/2) .* eps
Var reparameterize(Tape& tape, Var mu, Var logvar, Var eps);

// Untraced conveniences (run on a scratch tape internally).
std::pair<Tensor, Tensor> encode_eval(const Model& m, const Tensor& x);
Tensor decode_eval(const Model& m, const Tensor& z);
// Decoder output mapped to data space: identity for gaussian, sigmoid for
// bernoulli logits.
Tensor decode_mean_eval(const Model& m, const Tensor& z);

}  // namespace lrvae::nn
