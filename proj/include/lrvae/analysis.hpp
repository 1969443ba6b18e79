// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lrvae/nn.hpp"
#include "lrvae/tensor.hpp"

namespace lrvae::analysis {

// Differentiable row-wise map built on a tape: [n x in] -> [n x out] with
// rows treated as independent samples.
using DiffMap = std::function<Var(Tape&, Var)>;

struct ProbeConfig {
    double zeta = 0.05;            // effective-support confidence
    double varrho = 0.1;           // quantile confidence for L_f / eta
    double ball_radius = 0.1;      // r for pairwise forward ratios
    std::size_t n_probe_points = 64;
    std::size_t n_pairs_per_ball = 4;
    double power_iter_tol = 1e-10;
    std::uint64_t seed = 0;
    double tau_r = 0.0;            // recorded loss thresholds
    double tau_l = 0.0;

    void validate() const;
};

// Jacobian [out x in] of `map` at z ([in] or [1 x in]) by reverse-mode rows
// (a batch of identical inputs seeded with the identity). Throws NumericError
// on non-finite entries.
Tensor jacobian(const DiffMap& map, const Tensor& z);

// Decoder map in data space (sigmoid applied for bernoulli likelihoods) and
// the composite encoder-mean-after-decoder map.
DiffMap decoder_map(const nn::Model& model);
DiffMap encoder_mu_map(const nn::Model& model);
DiffMap composite_map(const nn::Model& model);  // z -> encode(decode(z)).mu

struct SpectralExtremes {
    double sigma_max = 0.0;
    double sigma_min = 0.0;
};

// Largest/smallest singular values: full one-sided Jacobi when
// min(p,q) <= 64, power + inverse iteration otherwise.
SpectralExtremes spectral_extremes(const Tensor& m, double power_tol = 1e-10,
                                   std::size_t max_iters = 20000, std::uint64_t seed = 0);

// R such that P(||Z|| <= R) = 1 - zeta for Z ~ N(0, I_C): sqrt of the
// chi^2_C quantile, by bisection on the regularized incomplete gamma ratio.
double r_zeta(std::size_t c, double zeta);

struct KlBounds {
    // (C/2) log(1 + t) with t = kappa_min^2/sigma^2: drops the trace term
    // and is violated by exact linear-Gaussian cases (reported, not asserted).
    double nominal_bound = 0.0;
    // (C/2) [log(1 + t) - t/(1 + t)]: keeps the trace term; a true lower
    // bound, tight when z0 = 0 and all singular values are equal.
    double corrected_bound = 0.0;
};

KlBounds kl_lower_bound(const Tensor& jacobian_matrix, double sigma2);
KlBounds kl_bounds_from_kappa(double kappa_min, std::size_t c, double sigma2);

struct LaplaceResult {
    Tensor z0;            // mode, [C]
    Tensor sigma;         // [C x C]
    double kl = 0.0;      // KL(N(z0, Sigma) || N(0, I))
    double kappa_min = 0.0;
    double nominal_bound = 0.0;
    double corrected_bound = 0.0;
    bool converged = false;  // false => result is approximate
    double grad_norm = 0.0;
    std::size_t iters = 0;
};

// Mode of 1/2 ||x - D(z)||^2 / sigma^2 + 1/2 ||z||^2 by gradient descent
// (Barzilai-Borwein trial step, Armijo backtracking) from z_init;
// Gauss-Newton covariance at the mode. Stops at gradient norm 1e-8 or the
// iteration cap; a run that hits the cap is flagged approximate.
LaplaceResult laplace_posterior(const DiffMap& decoder, std::size_t latent_dim,
                                const Tensor& x, double sigma2, const Tensor& z_init,
                                std::size_t max_iters = 5000);
// z_init defaults to the encoder mean.
LaplaceResult laplace_posterior(const nn::Model& model, const Tensor& x);

struct BiLipPoint {
    double z_norm = 0.0;
    double a = 0.0;          // ||J_D||_sigma
    double b = 0.0;          // ||J_{EoD} - I||_sigma
    double min_ratio = 0.0;  // pairwise forward ratios inside B(z, r)
    double max_ratio = 0.0;
};

struct BiLipReport {
    std::vector<BiLipPoint> points;
    double r_zeta_value = 0.0;
    double l_f = 0.0;          // (1 - varrho/2) quantile of A, nearest rank
    double eta = 0.0;          // same quantile of B
    bool l_defined = false;    // eta < 1
    double l = 0.0;            // max(L_f, 1/(1-eta)) when defined
    double frac_b_lt_1 = 0.0;
    double median_b = 0.0;
    ProbeConfig config;
};

BiLipReport bilipschitz_probe(const nn::Model& model, const ProbeConfig& config);

struct EpsFamily {
    double eps_max = 0.1;
    double gamma = 1.0;
    double at(double dist) const;  // eps_max * exp(-gamma * dist)
};

struct CollapseRecord {
    std::size_t probe_id = 0;
    double scale = 0.0;   // 0 for dataset members
    double dist = 0.0;    // Euclidean distance to the dataset
    double kl_q = 0.0;
    double kl_true = 0.0;  // Laplace-approximate; valid when has_true
    bool has_true = false;
    double eps_at_x = 0.0;
    bool within = false;
};

struct CollapseProfile {
    std::vector<CollapseRecord> records;
    EpsFamily eps_family;
    bool collapsed = false;  // every probe within its threshold
};

CollapseProfile collapse_profile(const nn::Model& model, const Tensor& dataset_x,
                                 const std::vector<double>& probe_scales,
                                 const EpsFamily& eps_family, double sigma2, bool with_true,
                                 std::uint64_t seed, std::size_t max_probe_bases = 64);

}  // namespace lrvae::analysis
