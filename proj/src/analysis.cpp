// SPDX-License-Identifier: Apache-2.0
#include "lrvae/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "lrvae/kernels.hpp"
#include "lrvae/linalg.hpp"
#include "lrvae/rng.hpp"

namespace lrvae::analysis {

void ProbeConfig::validate() const {
    if (!(zeta > 0.0 && zeta < 1.0)) throw ContractError("ProbeConfig: zeta must be in (0,1)");
    if (!(varrho > 0.0 && varrho < 1.0))
        throw ContractError("ProbeConfig: varrho must be in (0,1)");
    if (!(ball_radius > 0.0)) throw ContractError("ProbeConfig: ball_radius must be > 0");
    if (n_probe_points == 0) throw ContractError("ProbeConfig: n_probe_points must be >= 1");
}

Tensor jacobian(const DiffMap& map, const Tensor& z) {
    const std::size_t c = z.size();
    Tensor zrow({1, c}, z.vec());
    std::size_t d = 0;
    {
        Tape probe;
        Var out = map(probe, probe.leaf(zrow));
        const Tensor& y = probe.value(out);
        if (y.rows() != 1) throw ContractError("jacobian: map must be row-wise");
        d = y.cols();
    }
    // One backward pass over a batch of d identical rows seeded with I_d:
    // row i of the input gradient is e_i^T J.
    Tape tape;
    Tensor zb({d, c});
    for (std::size_t i = 0; i < d; ++i)
        std::copy(zrow.data(), zrow.data() + c, zb.data() + i * c);
    Var zv = tape.leaf(std::move(zb));
    Var y = map(tape, zv);
    tape.backward_from(y, Tensor::identity(d));
    Tensor j = tape.grad(zv);
    j.check_finite("jacobian");
    return j;
}

DiffMap decoder_map(const nn::Model& model) {
    return [&model](Tape& t, Var z) {
        nn::BoundModel bm = nn::bind(t, model);
        Var out = nn::decode(t, bm, z);
        if (model.likelihood.kind == nn::LikelihoodKind::bernoulli)
            out = t.activation(ActKind::sigmoid, out);
        return out;
    };
}

DiffMap encoder_mu_map(const nn::Model& model) {
    return [&model](Tape& t, Var x) {
        nn::BoundModel bm = nn::bind(t, model);
        return nn::encode(t, bm, x).first;
    };
}

DiffMap composite_map(const nn::Model& model) {
    return [&model](Tape& t, Var z) {
        nn::BoundModel bm = nn::bind(t, model);
        Var out = nn::decode(t, bm, z);
        if (model.likelihood.kind == nn::LikelihoodKind::bernoulli)
            out = t.activation(ActKind::sigmoid, out);
        return nn::encode(t, bm, out).first;
    };
}

SpectralExtremes spectral_extremes(const Tensor& m, double power_tol, std::size_t max_iters,
                                   std::uint64_t seed) {
    if (m.rank() != 2) throw ShapeError("spectral_extremes: expected 2-D tensor");
    m.check_finite("spectral_extremes input");
    SpectralExtremes out;
    if (std::min(m.rows(), m.cols()) <= 64) {
        std::vector<double> sv = linalg::jacobi_singular_values(m);
        out.sigma_max = sv.front();
        out.sigma_min = sv.back();
    } else {
        auto pr = linalg::power_iter_extremes(m, power_tol, max_iters, seed);
        out.sigma_max = pr.sigma_max;
        out.sigma_min = pr.sigma_min;
    }
    return out;
}

double r_zeta(std::size_t c, double zeta) {
    if (!(zeta > 0.0 && zeta < 1.0)) throw ContractError("r_zeta: zeta must be in (0,1)");
    if (c == 0) throw ContractError("r_zeta: C must be >= 1");
    const double target = 1.0 - zeta;
    const double a = 0.5 * static_cast<double>(c);
    auto cdf = [&](double r) { return linalg::gamma_p(a, 0.5 * r * r); };
    double lo = 0.0;
    double hi = std::sqrt(static_cast<double>(c)) + 10.0;
    while (cdf(hi) < target) hi *= 2.0;
    while (hi - lo > 1e-11 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

KlBounds kl_bounds_from_kappa(double kappa_min, std::size_t c, double sigma2) {
    if (!(sigma2 > 0.0)) throw ContractError("kl_lower_bound: sigma2 must be > 0");
    const double t = kappa_min * kappa_min / sigma2;
    KlBounds b;
    const double half_c = 0.5 * static_cast<double>(c);
    b.nominal_bound = half_c * std::log1p(t);
    b.corrected_bound = half_c * (std::log1p(t) - t / (1.0 + t));
    return b;
}

KlBounds kl_lower_bound(const Tensor& jacobian_matrix, double sigma2) {
    const SpectralExtremes se = spectral_extremes(jacobian_matrix);
    return kl_bounds_from_kappa(se.sigma_min, jacobian_matrix.cols(), sigma2);
}

namespace {

// 1/2 ||x - D(z)||^2 / sigma^2 + 1/2 ||z||^2 on a fresh tape.
double laplace_objective(const DiffMap& decoder, const Tensor& x, double sigma2,
                         const Tensor& z) {
    Tape t;
    Var zv = t.leaf(Tensor({1, z.size()}, z.vec()));
    Var y = decoder(t, zv);
    const Tensor& yv = t.value(y);
    require_same_shape(yv, Tensor({1, x.size()}), "laplace_posterior");
    double resid = kernels::active().sq_dist(yv.data(), x.data(), x.size());
    double prior = kernels::active().dot(z.data(), z.data(), z.size());
    return 0.5 * resid / sigma2 + 0.5 * prior;
}

}  // namespace

LaplaceResult laplace_posterior(const DiffMap& decoder, std::size_t latent_dim,
                                const Tensor& x, double sigma2, const Tensor& z_init,
                                std::size_t max_iters) {
    if (!(sigma2 > 0.0)) throw ContractError("laplace_posterior: sigma2 must be > 0");
    const std::size_t c = latent_dim;
    if (z_init.size() != c) throw ShapeError("laplace_posterior: z_init size != latent_dim");

    Tensor z({c}, z_init.vec());
    double f = laplace_objective(decoder, x, sigma2, z);
    double gnorm = 0.0;
    std::size_t it = 0;
    bool converged = false;
    Tensor z_prev({c}), g_prev({c});
    bool have_prev = false;
    for (; it < max_iters; ++it) {
        Tape t;
        Var zv = t.leaf(Tensor({1, c}, z.vec()));
        Var y = decoder(t, zv);
        Var r = t.sub(t.leaf(Tensor({1, x.size()}, x.vec())), y);
        Var obj = t.add(t.scale(t.sum_all(t.mul(r, r)), 0.5 / sigma2),
                        t.scale(t.sum_all(t.mul(zv, zv)), 0.5));
        t.backward(obj);
        Tensor g = t.grad(zv);
        g.check_finite("laplace_posterior gradient");
        gnorm = std::sqrt(kernels::active().dot(g.data(), g.data(), c));
        if (gnorm <= 1e-8) {
            converged = true;
            break;
        }
        // Barzilai-Borwein trial step, safeguarded by Armijo backtracking;
        // keeps plain (but conditioned-robust) gradient descent.
        double step = 1.0;
        if (have_prev) {
            double sy = 0.0, yy = 0.0;
            for (std::size_t i = 0; i < c; ++i) {
                const double s = z[i] - z_prev[i];
                const double dy = g[i] - g_prev[i];
                sy += s * dy;
                yy += dy * dy;
            }
            if (sy > 0.0 && yy > 0.0)
                step = std::min(std::max(sy / yy, 1e-12), 1e12);
        }
        z_prev = z;
        g_prev = g;
        have_prev = true;
        const double slope = 1e-4 * gnorm * gnorm;
        Tensor znew({c});
        bool accepted = false;
        for (int bt = 0; bt < 80; ++bt) {
            for (std::size_t i = 0; i < c; ++i) znew[i] = z[i] - step * g[i];
            const double fnew = laplace_objective(decoder, x, sigma2, znew);
            if (fnew <= f - step * slope) {
                z = znew;
                f = fnew;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // step underflow; report approximate
    }

    LaplaceResult out;
    out.z0 = z;
    out.converged = converged;
    out.grad_norm = gnorm;
    out.iters = it;

    Tensor j = jacobian(decoder, z);
    Tensor prec({c, c});
    kernels::active().matmul_tn(j.data(), j.data(), prec.data(), c, j.rows(), c, false);
    kernels::active().scale(1.0 / sigma2, prec.data(), prec.size());
    for (std::size_t i = 0; i < c; ++i) prec(i, i) += 1.0;
    out.sigma = linalg::spd_inverse(prec);
    const double logdet_sigma = -linalg::spd_logdet(prec);
    double tr = 0.0;
    for (std::size_t i = 0; i < c; ++i) tr += out.sigma(i, i);
    const double z0z0 = kernels::active().dot(z.data(), z.data(), c);
    out.kl = 0.5 * (tr + z0z0 - logdet_sigma - static_cast<double>(c));

    out.kappa_min = spectral_extremes(j).sigma_min;
    const KlBounds kb = kl_bounds_from_kappa(out.kappa_min, c, sigma2);
    out.nominal_bound = kb.nominal_bound;
    out.corrected_bound = kb.corrected_bound;
    return out;
}

LaplaceResult laplace_posterior(const nn::Model& model, const Tensor& x) {
    Tensor xrow({1, x.size()}, x.vec());
    auto [mu, lv] = nn::encode_eval(model, xrow);
    Tensor z0({model.latent_dim}, mu.vec());
    return laplace_posterior(decoder_map(model), model.latent_dim, x,
                             model.likelihood.sigma2, z0);
}

namespace {

// Nearest-rank quantile on a sorted copy.
double nearest_rank(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    std::size_t idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (idx == 0) idx = 1;
    if (idx > n) idx = n;
    return v[idx - 1];
}

}  // namespace

BiLipReport bilipschitz_probe(const nn::Model& model, const ProbeConfig& config) {
    config.validate();
    const std::size_t c = model.latent_dim;
    const DiffMap dmap = decoder_map(model);
    const DiffMap emap = encoder_mu_map(model);

    BiLipReport rep;
    rep.config = config;
    rep.r_zeta_value = r_zeta(c, config.zeta);

    Rng rng(config.seed, 0xb111ULL);
    std::vector<double> a_samples, b_samples;
    a_samples.reserve(config.n_probe_points);
    b_samples.reserve(config.n_probe_points);

    for (std::size_t p = 0; p < config.n_probe_points; ++p) {
        Tensor z({c});
        double norm = 0.0;
        for (;;) {
            for (std::size_t i = 0; i < c; ++i) z[i] = rng.normal();
            norm = std::sqrt(kernels::active().dot(z.data(), z.data(), c));
            if (norm <= rep.r_zeta_value) break;
        }

        Tensor jd = jacobian(dmap, z);
        const double a = spectral_extremes(jd, config.power_iter_tol).sigma_max;

        // J_{EoD}(z) = J_E(D(z)) * J_D(z); reuses J_D instead of a second
        // pass through the composite graph.
        Tensor dz = nn::decode_mean_eval(model, Tensor({1, c}, z.vec()));
        Tensor je = jacobian(emap, dz);
        Tensor jed({c, c});
        kernels::active().matmul_nn(je.data(), jd.data(), jed.data(), c, je.cols(), c, false);
        for (std::size_t i = 0; i < c; ++i) jed(i, i) -= 1.0;
        const double b = spectral_extremes(jed, config.power_iter_tol).sigma_max;

        BiLipPoint pt;
        pt.z_norm = norm;
        pt.a = a;
        pt.b = b;
        pt.min_ratio = 0.0;
        pt.max_ratio = 0.0;

        // Uniform pairs inside B(z, r): direction ~ normalized normal,
        // radius ~ r * U^(1/C).
        auto ball_point = [&](Tensor& out) {
            double nn2 = 0.0;
            for (std::size_t i = 0; i < c; ++i) {
                out[i] = rng.normal();
                nn2 += out[i] * out[i];
            }
            const double rad =
                config.ball_radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(c));
            const double sc = rad / std::max(std::sqrt(nn2), 1e-300);
            for (std::size_t i = 0; i < c; ++i) out[i] = z[i] + sc * out[i];
        };
        bool first = true;
        Tensor z1({c}), z2({c});
        for (std::size_t k = 0; k < config.n_pairs_per_ball; ++k) {
            ball_point(z1);
            ball_point(z2);
            const double dz12 = std::sqrt(kernels::active().sq_dist(z1.data(), z2.data(), c));
            if (dz12 < 1e-12) continue;
            Tensor y1 = nn::decode_mean_eval(model, Tensor({1, c}, z1.vec()));
            Tensor y2 = nn::decode_mean_eval(model, Tensor({1, c}, z2.vec()));
            const double dy =
                std::sqrt(kernels::active().sq_dist(y1.data(), y2.data(), y1.size()));
            const double ratio = dy / dz12;
            if (first) {
                pt.min_ratio = pt.max_ratio = ratio;
                first = false;
            } else {
                pt.min_ratio = std::min(pt.min_ratio, ratio);
                pt.max_ratio = std::max(pt.max_ratio, ratio);
            }
        }
        a_samples.push_back(a);
        b_samples.push_back(b);
        rep.points.push_back(pt);
    }

    const double q = 1.0 - config.varrho / 2.0;
    rep.l_f = nearest_rank(a_samples, q);
    rep.eta = nearest_rank(b_samples, q);
    rep.median_b = nearest_rank(b_samples, 0.5);
    std::size_t lt1 = 0;
    for (double b : b_samples)
        if (b < 1.0) ++lt1;
    rep.frac_b_lt_1 = static_cast<double>(lt1) / static_cast<double>(b_samples.size());
    rep.l_defined = rep.eta < 1.0;
    rep.l = rep.l_defined ? std::max(rep.l_f, 1.0 / (1.0 - rep.eta)) : 0.0;
    return rep;
}

double EpsFamily::at(double dist) const { return eps_max * std::exp(-gamma * dist); }

CollapseProfile collapse_profile(const nn::Model& model, const Tensor& dataset_x,
                                 const std::vector<double>& probe_scales,
                                 const EpsFamily& eps_family, double sigma2, bool with_true,
                                 std::uint64_t seed, std::size_t max_probe_bases) {
    if (dataset_x.rows() == 0) throw ContractError("collapse_profile: empty dataset");
    if (!(eps_family.eps_max > 0.0)) throw ContractError("collapse_profile: eps_max must be > 0");
    if (eps_family.gamma < 0.0) throw ContractError("collapse_profile: gamma must be >= 0");
    const std::size_t n = dataset_x.rows(), d = dataset_x.cols();
    const std::size_t n_bases = std::min(n, max_probe_bases);

    Rng rng(seed, 0xc011ULL);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    idx.resize(n_bases);

    auto dist_to_dataset = [&](const double* probe) {
        double best = kernels::active().sq_dist(probe, dataset_x.data(), d);
        for (std::size_t i = 1; i < n; ++i)
            best = std::min(best,
                            kernels::active().sq_dist(probe, dataset_x.data() + i * d, d));
        return std::sqrt(best);
    };

    CollapseProfile out;
    out.eps_family = eps_family;
    out.collapsed = true;
    std::size_t probe_id = 0;

    auto add_probe = [&](const Tensor& x, double scale, double dist) {
        auto [mu, lv] = nn::encode_eval(model, x);
        Tensor kl_rows({1});
        {
            const std::size_t c = mu.cols();
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double m = mu(0, j), l = lv(0, j);
                s += m * m + std::exp(l) - l - 1.0;
            }
            kl_rows[0] = 0.5 * s;
        }
        CollapseRecord rec;
        rec.probe_id = probe_id++;
        rec.scale = scale;
        rec.dist = dist;
        rec.kl_q = kl_rows[0];
        rec.eps_at_x = eps_family.at(dist);
        if (with_true) {
            Tensor xr({d}, x.vec());
            LaplaceResult lap = laplace_posterior(
                decoder_map(model), model.latent_dim, xr, sigma2,
                Tensor({model.latent_dim}, mu.vec()));
            rec.kl_true = lap.kl;
            rec.has_true = true;
        }
        rec.within = rec.kl_q <= rec.eps_at_x &&
                     (!rec.has_true || rec.kl_true <= rec.eps_at_x);
        if (!rec.within) out.collapsed = false;
        out.records.push_back(rec);
    };

    for (std::size_t bi = 0; bi < n_bases; ++bi) {
        const double* base = dataset_x.data() + idx[bi] * d;
        Tensor x({1, d});
        std::copy(base, base + d, x.data());
        add_probe(x, 0.0, 0.0);  // dataset member: dist is exactly 0
        for (double s : probe_scales) {
            Tensor xp({1, d});
            for (std::size_t j = 0; j < d; ++j) xp[j] = base[j] + s * rng.normal();
            add_probe(xp, s, dist_to_dataset(xp.data()));
        }
    }
    return out;
}

}  // namespace lrvae::analysis
