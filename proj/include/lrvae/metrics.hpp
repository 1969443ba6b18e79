// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "lrvae/nn.hpp"
#include "lrvae/tensor.hpp"

namespace lrvae::metrics {

// Encoder outputs over an evaluation set.
struct PosteriorSummary {
    Tensor mu;      // [n x C]
    Tensor logvar;  // [n x C]
};

struct MetricsReport {
    std::size_t n = 0;
    std::size_t c = 0;
    double eps_au = 0.01;
    double au = 0.0;  // fraction of active channels in [0,1]
    double kl = 0.0;  // mean sample-wise KL to the prior
    double mi = 0.0;  // Monte Carlo mutual information estimate (nats)
    std::uint64_t seed = 0;
};

// Batched encode of the dataset rows.
PosteriorSummary summarize(const nn::Model& model, const Tensor& x);

// Fraction of channels whose posterior-mean sample variance across the
// dataset is >= eps_au. Contract error for n < 2.
double active_units(const PosteriorSummary& summary, double eps_au);

// Mean over samples of KL(q(z|x_i) || N(0,I)).
double samplewise_kl(const PosteriorSummary& summary);

// MC estimate of I(X;Z) under the encoder channel:
// (1/n) sum_i E_{q(z|x_i)}[log q(z|x_i) - log qhat(z)] with the aggregate
// posterior qhat(z) = (1/n) sum_j q(z|x_j) evaluated by log-sum-exp.
// The evaluation subset is capped at `cap` points (default 2048).
double mutual_information(const nn::Model& model, const Tensor& x, std::size_t n_mc,
                          std::uint64_t seed, std::size_t cap = 2048);

MetricsReport evaluate(const nn::Model& model, const Tensor& x, double eps_au,
                       std::size_t n_mc, std::uint64_t seed);

}  // namespace lrvae::metrics
