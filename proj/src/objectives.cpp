// SPDX-License-Identifier: Apache-2.0
#include "lrvae/objectives.hpp"

#include <cmath>

#include "lrvae/kernels.hpp"

namespace lrvae::objectives {

Var kl_to_standard_normal(Tape& tape, Var mu, Var logvar) {
    require_same_shape(tape.value(mu), tape.value(logvar), "kl_to_standard_normal");
    Var mu2 = tape.mul(mu, mu);
    Var ev = tape.exp(logvar);
    Var terms = tape.add_const(tape.sub(tape.add(mu2, ev), logvar), -1.0);
    return tape.scale(tape.sum_rows(terms), 0.5);
}

Tensor kl_to_standard_normal(const Tensor& mu, const Tensor& logvar) {
    require_same_shape(mu, logvar, "kl_to_standard_normal");
    const std::size_t n = mu.rows(), c = mu.cols();
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double m = mu(i, j), lv = logvar(i, j);
            s += m * m + std::exp(lv) - lv - 1.0;
        }
        out[i] = 0.5 * s;
    }
    return out;
}

Var reconstruction_nll(Tape& tape, Var x, Var decoder_out, const nn::Likelihood& lik) {
    const Tensor& xv = tape.value(x);
    const Tensor& ov = tape.value(decoder_out);
    require_same_shape(xv, ov, "reconstruction_nll");
    const double d = static_cast<double>(xv.cols());
    if (lik.kind == nn::LikelihoodKind::gaussian) {
        Var diff = tape.sub(x, decoder_out);
        Var sq = tape.sum_rows(tape.mul(diff, diff));
        const double c = 0.5 * d * std::log(2.0 * M_PI * lik.sigma2);
        return tape.add_const(tape.scale(sq, 0.5 / lik.sigma2), c);
    }
    for (std::size_t i = 0; i < xv.size(); ++i)
        if (!(xv[i] >= 0.0 && xv[i] <= 1.0))
            throw ContractError("reconstruction_nll: bernoulli requires x in [0,1]");
    Var sp = tape.softplus(decoder_out);
    Var xl = tape.mul(x, decoder_out);
    return tape.sum_rows(tape.sub(sp, xl));
}

Var latent_reconstruction_loss(Tape& tape, Var z_hat, Var z) {
    require_same_shape(tape.value(z_hat), tape.value(z), "latent_reconstruction_loss");
    Var diff = tape.sub(z_hat, z);
    return tape.sum_rows(tape.mul(diff, diff));
}

Tensor latent_reconstruction_loss(const Tensor& z_hat, const Tensor& z) {
    require_same_shape(z_hat, z, "latent_reconstruction_loss");
    const std::size_t n = z_hat.rows(), c = z_hat.cols();
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i)
        out[i] = kernels::active().sq_dist(z_hat.data() + i * c, z.data() + i * c, c);
    return out;
}

double alpha_schedule(int epoch, int warmup_epochs, double alpha_T, Schedule schedule) {
    if (epoch < 0) throw ContractError("alpha_schedule: epoch must be >= 0");
    if (warmup_epochs < 1) throw ContractError("alpha_schedule: warmup_epochs must be >= 1");
    switch (schedule) {
        case Schedule::linear: {
            const double t = std::min(epoch, warmup_epochs);
            return alpha_T * t / static_cast<double>(warmup_epochs);
        }
    }
    return alpha_T;
}

TotalLoss total_loss(Tape& tape, const nn::Model& model, const Tensor& x,
                     const LossWeights& weights, int epoch, Rng& noise) {
    if (x.rows() == 0) throw ContractError("total_loss: empty batch");
    const std::size_t n = x.rows();
    const std::size_t c = model.latent_dim;

    TotalLoss out;
    out.bound = nn::bind(tape, model);
    Var xv = tape.leaf(x);

    auto [mu, logvar] = nn::encode(tape, out.bound, xv);
    out.mu = mu;
    out.logvar = logvar;

    Tensor eps({n, c});
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = noise.normal();
    Var z = nn::reparameterize(tape, mu, logvar, tape.leaf(std::move(eps)));
    Var xrec = nn::decode(tape, out.bound, z);

    Var dr_rows = reconstruction_nll(tape, xv, xrec, model.likelihood);
    Var kl_rows = kl_to_standard_normal(tape, mu, logvar);

    // LR input: decode output in data space (sigmoid of logits for bernoulli).
    Var lr_z = z;
    Var lr_dec = xrec;
    if (weights.lr_z_source == LrZSource::prior) {
        Tensor zp({n, c});
        for (std::size_t i = 0; i < zp.size(); ++i) zp[i] = noise.normal();
        lr_z = tape.leaf(std::move(zp));
        lr_dec = nn::decode(tape, out.bound, lr_z);
    }
    if (model.likelihood.kind == nn::LikelihoodKind::bernoulli)
        lr_dec = tape.activation(ActKind::sigmoid, lr_dec);
    Var z_hat = nn::encode(tape, out.bound, lr_dec).first;
    Var lr_rows = latent_reconstruction_loss(tape, z_hat, lr_z);

    Var dr_mean = tape.mean_all(dr_rows);
    Var kl_mean = tape.mean_all(kl_rows);
    Var lr_mean = tape.mean_all(lr_rows);

    const double alpha_t =
        alpha_schedule(epoch, weights.warmup_epochs, weights.alpha_T, weights.schedule);
    Var total = tape.add(tape.add(tape.scale(kl_mean, weights.beta), dr_mean),
                         tape.scale(lr_mean, alpha_t));

    auto& b = out.breakdown;
    b.dr = tape.value(dr_mean)[0];
    b.kl = tape.value(kl_mean)[0];
    b.lr = tape.value(lr_mean)[0];
    b.total = tape.value(total)[0];
    b.alpha_t = alpha_t;
    b.beta = weights.beta;
    if (!std::isfinite(b.dr)) throw NumericError("total_loss: non-finite dr component");
    if (!std::isfinite(b.kl)) throw NumericError("total_loss: non-finite kl component");
    if (!std::isfinite(b.lr)) throw NumericError("total_loss: non-finite lr component");
    if (!std::isfinite(b.total)) throw NumericError("total_loss: non-finite total");

    out.total = total;
    return out;
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
    if (params.size() != grads.size())
        throw ContractError("Adam::step: params/grads size mismatch");
    if (m_.empty()) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->shape());
            v_.emplace_back(p->shape());
        }
    }
    ++t_;
    const double c1 = 1.0 / (1.0 - std::pow(b1_, t_));
    const double c2 = 1.0 / (1.0 - std::pow(b2_, t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        require_same_shape(p, g, "Adam::step");
        kernels::active().adam_step(p.data(), g.data(), m_[i].data(), v_[i].data(), p.size(),
                                    lr_, b1_, b2_, eps_, c1, c2);
    }
}

}  // namespace lrvae::objectives
