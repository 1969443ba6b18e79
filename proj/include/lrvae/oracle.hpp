// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "lrvae/nn.hpp"
#include "lrvae/tensor.hpp"

namespace lrvae::oracle {

// x = W z + b + sigma * eps with z ~ N(0, I_C), eps ~ N(0, I_D).
struct LinearGaussianModel {
    Tensor w;       // [D x C]
    Tensor b;       // [D]
    double sigma2 = 1.0;
};

struct PosteriorParams {
    Tensor mean;    // [C]
    Tensor sigma;   // [C x C]
};

// Sigma = (I + W^T W / sigma^2)^-1, mean = Sigma W^T (x - b) / sigma^2.
// Uses Gauss-Jordan inversion so it stays an independent route from the
// Cholesky-based analysis code it cross-checks.
PosteriorParams exact_posterior(const LinearGaussianModel& m, const Tensor& x);

// I(Z;X) = 1/2 log det(I + W^T W / sigma^2).
double exact_mi(const LinearGaussianModel& m);

// q(z|x) = N(A x + c, S) with constant SPD covariance S.
struct GaussianConditional {
    Tensor a;  // [C x D]
    Tensor c;  // [C]
    Tensor s;  // [C x C]
};

// The q that equals the exact posterior.
GaussianConditional posterior_conditional(const LinearGaussianModel& m);

struct LrDecomposition {
    double l_lr = 0.0;           // MC estimate of E_{p(z,x)}[-log q(z|x)]
    double h_z_given_x = 0.0;    // closed form 1/2 log det(2 pi e Sigma)
    double e_kl = 0.0;           // mean closed-form KL(p(z|x) || q(z|x))
    double gap = 0.0;            // l_lr - h_z_given_x - e_kl
    double gap_se = 0.0;         // MC standard error of the gap
    double mi_bound_slack = 0.0; // exact_mi - (H(Z) - l_lr)
    std::uint64_t seed = 0;
    std::size_t n_mc = 0;
};

LrDecomposition lr_decomposition_check(const LinearGaussianModel& m,
                                       const GaussianConditional& q,
                                       std::size_t n_mc, std::uint64_t seed);

// Riemann sum of p log(p/q) * step over aligned grids. Throws ContractError
// where q vanishes on the support of p.
double grid_kl(const std::vector<double>& p, const std::vector<double>& q, double step);

// Closed-form KL between Gaussians N(m1, S1) and N(m2, S2).
double gaussian_kl(const Tensor& m1, const Tensor& s1, const Tensor& m2, const Tensor& s2);

// A Model whose decoder is exactly x = W z + b (single affine layer,
// zero-weight encoder heads).
nn::Model make_decoder_model(const LinearGaussianModel& m);

// A Model whose encoder mu/logvar heads produce the exact posterior
// N(Sigma W^T (x-b)/sigma^2, diag Sigma). Representable exactly only when
// W^T W is diagonal; the logvar head uses diag(Sigma).
nn::Model make_posterior_encoder_model(const LinearGaussianModel& m);

}  // namespace lrvae::oracle
