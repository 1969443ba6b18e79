// SPDX-License-Identifier: Apache-2.0
#include "lrvae/nn.hpp"

#include <cmath>

#include "lrvae/rng.hpp"

namespace lrvae::nn {

const char* likelihood_name(LikelihoodKind k) {
    return k == LikelihoodKind::gaussian ? "gaussian" : "bernoulli";
}

LikelihoodKind likelihood_from_name(const std::string& name) {
    if (name == "gaussian") return LikelihoodKind::gaussian;
    if (name == "bernoulli") return LikelihoodKind::bernoulli;
    throw ConfigError("unknown likelihood: " + name);
}

std::vector<Tensor*> Model::params() {
    std::vector<Tensor*> out;
    for (auto& l : encoder_trunk) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    out.push_back(&mu_head.w);
    out.push_back(&mu_head.b);
    out.push_back(&logvar_head.w);
    out.push_back(&logvar_head.b);
    for (auto& l : decoder) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    return out;
}

std::vector<const Tensor*> Model::params() const {
    auto mut = const_cast<Model*>(this)->params();
    return {mut.begin(), mut.end()};
}

std::size_t Model::param_count() const {
    std::size_t n = 0;
    for (const Tensor* p : params()) n += p->size();
    return n;
}

namespace {

Layer init_layer(const LayerSpec& spec, Rng& rng) {
    if (spec.in_dim == 0 || spec.out_dim == 0)
        throw ContractError("init_model: layer dims must be >= 1");
    Layer l;
    l.spec = spec;
    l.w = Tensor({spec.in_dim, spec.out_dim});
    l.b = Tensor({1, spec.out_dim});
    const bool he = spec.act == ActKind::relu || spec.act == ActKind::leaky_relu;
    const double std = std::sqrt((he ? 2.0 : 1.0) / static_cast<double>(spec.in_dim));
    for (std::size_t i = 0; i < l.w.size(); ++i) l.w[i] = std * rng.normal();
    return l;
}

}  // namespace

Model init_model(const ModelArch& arch, std::uint64_t seed) {
    if (arch.data_dim == 0 || arch.latent_dim == 0)
        throw ContractError("init_model: data_dim and latent_dim must be >= 1");
    Rng rng(seed, 0x1417ULL);
    Model m;
    m.data_dim = arch.data_dim;
    m.latent_dim = arch.latent_dim;
    m.likelihood = arch.likelihood;

    std::size_t w = arch.data_dim;
    for (std::size_t h : arch.enc_hidden) {
        m.encoder_trunk.push_back(
            init_layer({w, h, arch.act, arch.leaky_slope}, rng));
        w = h;
    }
    m.mu_head = init_layer({w, arch.latent_dim, ActKind::none, arch.leaky_slope}, rng);
    m.logvar_head = init_layer({w, arch.latent_dim, ActKind::none, arch.leaky_slope}, rng);

    w = arch.latent_dim;
    for (std::size_t h : arch.dec_hidden) {
        m.decoder.push_back(init_layer({w, h, arch.act, arch.leaky_slope}, rng));
        w = h;
    }
    m.decoder.push_back(init_layer({w, arch.data_dim, ActKind::none, arch.leaky_slope}, rng));
    return m;
}

std::vector<Var> BoundModel::param_vars() const {
    std::vector<Var> out;
    for (const auto& l : trunk) {
        out.push_back(l.w);
        out.push_back(l.b);
    }
    out.push_back(mu.w);
    out.push_back(mu.b);
    out.push_back(logvar.w);
    out.push_back(logvar.b);
    for (const auto& l : decoder) {
        out.push_back(l.w);
        out.push_back(l.b);
    }
    return out;
}

BoundModel bind(Tape& tape, const Model& model) {
    auto bind_layer = [&](const Layer& l) {
        return BoundLayer{tape.leaf(l.w), tape.leaf(l.b), l.spec};
    };
    BoundModel bm;
    bm.model = &model;
    for (const auto& l : model.encoder_trunk) bm.trunk.push_back(bind_layer(l));
    bm.mu = bind_layer(model.mu_head);
    bm.logvar = bind_layer(model.logvar_head);
    for (const auto& l : model.decoder) bm.decoder.push_back(bind_layer(l));
    return bm;
}

Var affine(Tape& tape, const BoundLayer& layer, Var x) {
    Var y = tape.add_rowvec(tape.matmul(x, layer.w), layer.b);
    return tape.activation(layer.spec.act, y, layer.spec.leaky_slope);
}

Var forward_layers(Tape& tape, const std::vector<BoundLayer>& layers, Var x) {
    for (const auto& l : layers) x = affine(tape, l, x);
    return x;
}

std::pair<Var, Var> encode(Tape& tape, const BoundModel& m, Var x) {
    const Tensor& xv = tape.value(x);
    if (xv.cols() != m.model->data_dim)
        throw ShapeError("encode: input width " + std::to_string(xv.cols()) +
                         " != data_dim " + std::to_string(m.model->data_dim));
    Var h = forward_layers(tape, m.trunk, x);
    Var mu = affine(tape, m.mu, h);
    Var logvar = tape.clamp(affine(tape, m.logvar, h), kLogvarClampLo, kLogvarClampHi);
    return {mu, logvar};
}

Var decode(Tape& tape, const BoundModel& m, Var z) {
    const Tensor& zv = tape.value(z);
    if (zv.cols() != m.model->latent_dim)
        throw ShapeError("decode: input width " + std::to_string(zv.cols()) +
                         " != latent_dim " + std::to_string(m.model->latent_dim));
    return forward_layers(tape, m.decoder, z);
}

Var reparameterize(Tape& tape, Var mu, Var logvar, Var eps) {
    require_same_shape(tape.value(mu), tape.value(logvar), "reparameterize");
    require_same_shape(tape.value(mu), tape.value(eps), "reparameterize");
    Var std = tape.exp(tape.scale(logvar, 0.5));
    return tape.add(mu, tape.mul(std, eps));
}

std::pair<Tensor, Tensor> encode_eval(const Model& m, const Tensor& x) {
    Tape tape;
    BoundModel bm = bind(tape, m);
    auto [mu, lv] = encode(tape, bm, tape.leaf(x));
    return {tape.value(mu), tape.value(lv)};
}

Tensor decode_eval(const Model& m, const Tensor& z) {
    Tape tape;
    BoundModel bm = bind(tape, m);
    return tape.value(decode(tape, bm, tape.leaf(z)));
}

Tensor decode_mean_eval(const Model& m, const Tensor& z) {
    Tensor out = decode_eval(m, z);
    if (m.likelihood.kind == LikelihoodKind::bernoulli) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double x = out[i];
            out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        }
    }
    return out;
}

}  // namespace lrvae::nn
