// SPDX-License-Identifier: Apache-2.0
#include "lrvae/oracle.hpp"

#include <cmath>

#include "lrvae/kernels.hpp"
#include "lrvae/linalg.hpp"
#include "lrvae/rng.hpp"

namespace lrvae::oracle {

namespace {

// I + W^T W / sigma^2, [C x C]
Tensor precision(const LinearGaussianModel& m) {
    const std::size_t c = m.w.cols();
    Tensor g({c, c});
    kernels::active().matmul_tn(m.w.data(), m.w.data(), g.data(), c, m.w.rows(), c, false);
    kernels::active().scale(1.0 / m.sigma2, g.data(), g.size());
    for (std::size_t i = 0; i < c; ++i) g(i, i) += 1.0;
    return g;
}

// log det by Gauss elimination with partial pivoting (independent of the
// Cholesky route).
double logdet_gauss(Tensor a) {
    const std::size_t n = a.rows();
    double ld = 0.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (a(piv, col) == 0.0) throw NumericError("logdet: singular matrix");
        if (piv != col)
            for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
        ld += std::log(std::abs(a(col, col)));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
        }
    }
    return ld;
}

}  // namespace

PosteriorParams exact_posterior(const LinearGaussianModel& m, const Tensor& x) {
    const std::size_t d = m.w.rows(), c = m.w.cols();
    if (x.size() != d)
        throw ShapeError("exact_posterior: x size " + std::to_string(x.size()) +
                         " != D " + std::to_string(d));
    PosteriorParams out;
    out.sigma = linalg::gauss_jordan_inverse(precision(m));
    // mean = Sigma W^T (x - b) / sigma^2
    Tensor resid({d});
    for (std::size_t i = 0; i < d; ++i) resid[i] = x[i] - m.b[i];
    Tensor wt_r({c});
    kernels::active().matmul_tn(m.w.data(), resid.data(), wt_r.data(), c, d, 1, false);
    out.mean = Tensor({c});
    kernels::active().matmul_nn(out.sigma.data(), wt_r.data(), out.mean.data(), c, c, 1, false);
    kernels::active().scale(1.0 / m.sigma2, out.mean.data(), c);
    return out;
}

double exact_mi(const LinearGaussianModel& m) {
    return 0.5 * logdet_gauss(precision(m));
}

GaussianConditional posterior_conditional(const LinearGaussianModel& m) {
    const std::size_t d = m.w.rows(), c = m.w.cols();
    GaussianConditional q;
    q.s = linalg::gauss_jordan_inverse(precision(m));
    // A = Sigma W^T / sigma^2 ; c = -A b
    Tensor wt({c, d});
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < c; ++j) wt(j, i) = m.w(i, j);
    q.a = Tensor({c, d});
    kernels::active().matmul_nn(q.s.data(), wt.data(), q.a.data(), c, c, d, false);
    kernels::active().scale(1.0 / m.sigma2, q.a.data(), q.a.size());
    q.c = Tensor({c});
    kernels::active().matmul_nn(q.a.data(), m.b.data(), q.c.data(), c, d, 1, false);
    kernels::active().scale(-1.0, q.c.data(), c);
    return q;
}

double gaussian_kl(const Tensor& m1, const Tensor& s1, const Tensor& m2, const Tensor& s2) {
    const std::size_t c = m1.size();
    Tensor s2inv = linalg::spd_inverse(s2);
    double tr = 0.0;
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t k = 0; k < c; ++k) tr += s2inv(i, k) * s1(k, i);
    Tensor diff({c});
    for (std::size_t i = 0; i < c; ++i) diff[i] = m2[i] - m1[i];
    Tensor tmp({c});
    kernels::active().matmul_nn(s2inv.data(), diff.data(), tmp.data(), c, c, 1, false);
    const double quad = kernels::active().dot(diff.data(), tmp.data(), c);
    const double ld1 = linalg::spd_logdet(s1);
    const double ld2 = linalg::spd_logdet(s2);
    return 0.5 * (tr + quad - static_cast<double>(c) + ld2 - ld1);
}

LrDecomposition lr_decomposition_check(const LinearGaussianModel& m,
                                       const GaussianConditional& q,
                                       std::size_t n_mc, std::uint64_t seed) {
    const std::size_t d = m.w.rows(), c = m.w.cols();
    if (q.a.rows() != c || q.a.cols() != d || q.s.rows() != c || q.s.cols() != c)
        throw ContractError("lr_decomposition_check: q dims do not match model");
    std::vector<double> chol = q.s.vec();
    if (!linalg::cholesky(chol, c))
        throw ContractError("lr_decomposition_check: q covariance not positive definite");
    const double q_logdet = linalg::cholesky_logdet(chol, c);

    PosteriorParams post = exact_posterior(m, m.b);  // Sigma is x-independent
    const double h_zx = 0.5 * (static_cast<double>(c) * std::log(2.0 * M_PI * std::exp(1.0)) +
                               linalg::spd_logdet(post.sigma));

    // Per-x KL(p(z|x) || q(z|x)) splits into a constant part and a quadratic
    // in the mean difference.
    Tensor s_qinv = linalg::spd_inverse(q.s);
    double tr = 0.0;
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t k = 0; k < c; ++k) tr += s_qinv(i, k) * post.sigma(k, i);
    const double kl_const =
        0.5 * (tr - static_cast<double>(c) + q_logdet - linalg::spd_logdet(post.sigma));

    GaussianConditional post_q = posterior_conditional(m);
    const double sigma = std::sqrt(m.sigma2);
    Rng rng(seed, 0xa11cULL);

    LrDecomposition out;
    out.seed = seed;
    out.n_mc = n_mc;
    double sum_val = 0.0, sum_kl = 0.0, sum_gap = 0.0, sum_gap2 = 0.0;
    std::vector<double> z(c), x(d), mq(c), mp(c), diff(c), tmp(c);
    const double log2pi = std::log(2.0 * M_PI);
    for (std::size_t it = 0; it < n_mc; ++it) {
        for (std::size_t j = 0; j < c; ++j) z[j] = rng.normal();
        kernels::active().matmul_nn(m.w.data(), z.data(), x.data(), d, c, 1, false);
        for (std::size_t j = 0; j < d; ++j) x[j] += m.b[j] + sigma * rng.normal();

        // -log q(z|x)
        kernels::active().matmul_nn(q.a.data(), x.data(), mq.data(), c, d, 1, false);
        for (std::size_t j = 0; j < c; ++j) {
            mq[j] += q.c[j];
            diff[j] = z[j] - mq[j];
        }
        tmp = diff;
        linalg::cholesky_solve(chol, c, tmp);
        const double quad = kernels::active().dot(diff.data(), tmp.data(), c);
        const double val = 0.5 * (static_cast<double>(c) * log2pi + q_logdet + quad);

        // KL(p(z|x) || q(z|x))
        kernels::active().matmul_nn(post_q.a.data(), x.data(), mp.data(), c, d, 1, false);
        for (std::size_t j = 0; j < c; ++j) {
            mp[j] += post_q.c[j];
            diff[j] = mq[j] - mp[j];
        }
        kernels::active().matmul_nn(s_qinv.data(), diff.data(), tmp.data(), c, c, 1, false);
        const double kl_x = kl_const + 0.5 * kernels::active().dot(diff.data(), tmp.data(), c);

        const double gap_i = val - h_zx - kl_x;
        sum_val += val;
        sum_kl += kl_x;
        sum_gap += gap_i;
        sum_gap2 += gap_i * gap_i;
    }
    const double n = static_cast<double>(n_mc);
    out.l_lr = sum_val / n;
    out.h_z_given_x = h_zx;
    out.e_kl = sum_kl / n;
    out.gap = sum_gap / n;
    const double var_gap = std::max(0.0, sum_gap2 / n - out.gap * out.gap);
    out.gap_se = std::sqrt(var_gap / n);
    const double h_z = 0.5 * static_cast<double>(c) * std::log(2.0 * M_PI * std::exp(1.0));
    out.mi_bound_slack = exact_mi(m) - (h_z - out.l_lr);
    return out;
}

double grid_kl(const std::vector<double>& p, const std::vector<double>& q, double step) {
    if (p.size() != q.size()) throw ContractError("grid_kl: grids not aligned");
    if (!(step > 0.0)) throw ContractError("grid_kl: step must be > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw ContractError("grid_kl: negative density");
        if (p[i] == 0.0) continue;
        if (q[i] <= 0.0)
            throw ContractError("grid_kl: q vanishes on the support of p");
        s += p[i] * std::log(p[i] / q[i]);
    }
    return s * step;
}

nn::Model make_decoder_model(const LinearGaussianModel& m) {
    const std::size_t d = m.w.rows(), c = m.w.cols();
    nn::Model model;
    model.data_dim = d;
    model.latent_dim = c;
    model.likelihood = {nn::LikelihoodKind::gaussian, m.sigma2};
    // decoder: z [n x C] * W_l [C x D] + b
    nn::Layer dec;
    dec.spec = {c, d, ActKind::none, 0.01};
    dec.w = Tensor({c, d});
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < c; ++j) dec.w(j, i) = m.w(i, j);
    dec.b = Tensor({1, d});
    for (std::size_t i = 0; i < d; ++i) dec.b[i] = m.b[i];
    model.decoder.push_back(std::move(dec));

    nn::Layer head;
    head.spec = {d, c, ActKind::none, 0.01};
    head.w = Tensor({d, c});
    head.b = Tensor({1, c});
    model.mu_head = head;
    model.logvar_head = std::move(head);
    return model;
}

nn::Model make_posterior_encoder_model(const LinearGaussianModel& m) {
    nn::Model model = make_decoder_model(m);
    GaussianConditional q = posterior_conditional(m);
    const std::size_t d = m.w.rows(), c = m.w.cols();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < c; ++j) model.mu_head.w(i, j) = q.a(j, i);
    for (std::size_t j = 0; j < c; ++j) {
        model.mu_head.b[j] = q.c[j];
        model.logvar_head.b[j] = std::log(q.s(j, j));
    }
    return model;
}

}  // namespace lrvae::oracle
