// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "lrvae/nn.hpp"
#include "lrvae/rng.hpp"
#include "lrvae/tape.hpp"

namespace lrvae::objectives {

enum class Schedule { linear };
enum class LrZSource { posterior, prior };

struct LossWeights {
    double beta = 1.0;
    double alpha_T = 0.0;
    int warmup_epochs = 1;  // T
    Schedule schedule = Schedule::linear;
    LrZSource lr_z_source = LrZSource::posterior;
};

// Batch-mean components and the weights that were applied;
// total = beta*kl + dr + alpha_t*lr.
struct LossBreakdown {
    double dr = 0.0;
    double kl = 0.0;
    double lr = 0.0;
    double total = 0.0;
    double alpha_t = 0.0;
    double beta = 0.0;
};

// Per-sample KL(q || N(0,I)) rows: 1/2 sum_c (mu^2 + e^lv - lv - 1).
Var kl_to_standard_normal(Tape& tape, Var mu, Var logvar);
Tensor kl_to_standard_normal(const Tensor& mu, const Tensor& logvar);

// Per-sample negative log likelihood rows. Gaussian keeps its additive
// constant (D/2) log(2 pi sigma^2); bernoulli is the stable
// softplus(l) - x*l cross-entropy and requires x in [0,1].
Var reconstruction_nll(Tape& tape, Var x, Var decoder_out, const nn::Likelihood& lik);

// Per-sample ||z_hat - z||^2 rows.
Var latent_reconstruction_loss(Tape& tape, Var z_hat, Var z);
Tensor latent_reconstruction_loss(const Tensor& z_hat, const Tensor& z);

double alpha_schedule(int epoch, int warmup_epochs, double alpha_T, Schedule schedule);

struct TotalLoss {
    LossBreakdown breakdown;
    Var total;            // scalar node on the tape
    Var mu, logvar;       // encoder outputs for the batch
    nn::BoundModel bound; // parameter leaves in Model::params() order
};

// Builds the full objective on `tape`: z ~ q(z|x) via reparameterize, DR on
// decode(z), closed-form KL, LR = ||encode(decode(z)).mu - z||^2 with
// gradients flowing through encoder, decoder and z. Throws NumericError
// naming the first non-finite component.
TotalLoss total_loss(Tape& tape, const nn::Model& model, const Tensor& x,
                     const LossWeights& weights, int epoch, Rng& noise);

// Adam with step 1e-3 and moment decays 0.9/0.999 by default.
class Adam {
  public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);
    int iterations() const { return t_; }

  private:
    double lr_, b1_, b2_, eps_;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace lrvae::objectives
