// SPDX-License-Identifier: Apache-2.0
#include "lrvae/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lrvae/objectives.hpp"
#include "lrvae/rng.hpp"

namespace lrvae::metrics {

PosteriorSummary summarize(const nn::Model& model, const Tensor& x) {
    const std::size_t n = x.rows(), d = x.cols(), c = model.latent_dim;
    PosteriorSummary s{Tensor({n, c}), Tensor({n, c})};
    const std::size_t chunk = 512;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t m = std::min(chunk, n - start);
        Tensor xb({m, d});
        std::copy(x.data() + start * d, x.data() + (start + m) * d, xb.data());
        auto [mu, lv] = nn::encode_eval(model, xb);
        std::copy(mu.data(), mu.data() + m * c, s.mu.data() + start * c);
        std::copy(lv.data(), lv.data() + m * c, s.logvar.data() + start * c);
    }
    return s;
}

double active_units(const PosteriorSummary& summary, double eps_au) {
    const std::size_t n = summary.mu.rows(), c = summary.mu.cols();
    if (n < 2) throw ContractError("active_units: needs at least 2 samples");
    std::size_t active = 0;
    for (std::size_t j = 0; j < c; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += summary.mu(i, j);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = summary.mu(i, j) - mean;
            ss += d * d;
        }
        const double var = ss / static_cast<double>(n - 1);
        if (var >= eps_au) ++active;
    }
    return static_cast<double>(active) / static_cast<double>(c);
}

double samplewise_kl(const PosteriorSummary& summary) {
    Tensor rows = objectives::kl_to_standard_normal(summary.mu, summary.logvar);
    double s = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) s += rows[i];
    return s / static_cast<double>(rows.size());
}

double mutual_information(const nn::Model& model, const Tensor& x, std::size_t n_mc,
                          std::uint64_t seed, std::size_t cap) {
    if (x.rows() == 0) throw ContractError("mutual_information: empty dataset");
    if (n_mc == 0) throw ContractError("mutual_information: n_mc must be >= 1");
    const std::size_t n = std::min(x.rows(), cap);
    const std::size_t d = x.cols(), c = model.latent_dim;
    Tensor xs({n, d});
    std::copy(x.data(), x.data() + n * d, xs.data());
    PosteriorSummary s = summarize(model, xs);

    // Per-row inverse variances and log normalizers.
    Tensor inv_var({n, c});
    std::vector<double> log_norm(n);
    const double log2pi = std::log(2.0 * M_PI);
    for (std::size_t i = 0; i < n; ++i) {
        double lvsum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double lv = s.logvar(i, j);
            inv_var(i, j) = std::exp(-lv);
            lvsum += lv;
        }
        log_norm[i] = -0.5 * (lvsum + static_cast<double>(c) * log2pi);
    }

    // Noise is keyed on the row contents, not the row position, so the
    // estimate is invariant to dataset row order (up to summation order).
    auto row_hash = [&](std::size_t i) {
        std::uint64_t h = 1469598103934665603ULL;
        const unsigned char* bytes = reinterpret_cast<const unsigned char*>(xs.data() + i * d);
        for (std::size_t b = 0; b < d * sizeof(double); ++b) {
            h ^= bytes[b];
            h *= 1099511628211ULL;
        }
        return h;
    };

    std::vector<double> z(c), lw(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, row_hash(i)));
        for (std::size_t rep = 0; rep < n_mc; ++rep) {
            for (std::size_t j = 0; j < c; ++j)
                z[j] = s.mu(i, j) + std::exp(0.5 * s.logvar(i, j)) * rng.normal();
            for (std::size_t k = 0; k < n; ++k) {
                double quad = 0.0;
                const double* mu_k = s.mu.data() + k * c;
                const double* iv_k = inv_var.data() + k * c;
                for (std::size_t j = 0; j < c; ++j) {
                    const double diff = z[j] - mu_k[j];
                    quad += diff * diff * iv_k[j];
                }
                lw[k] = log_norm[k] - 0.5 * quad;
            }
            const double lq = lw[i];
            const double mx = *std::max_element(lw.begin(), lw.end());
            double se = 0.0;
            for (std::size_t k = 0; k < n; ++k) se += std::exp(lw[k] - mx);
            const double lagg = mx + std::log(se) - std::log(static_cast<double>(n));
            total += lq - lagg;
        }
    }
    return total / static_cast<double>(n * n_mc);
}

MetricsReport evaluate(const nn::Model& model, const Tensor& x, double eps_au,
                       std::size_t n_mc, std::uint64_t seed) {
    MetricsReport r;
    r.n = x.rows();
    r.c = model.latent_dim;
    r.eps_au = eps_au;
    r.seed = seed;
    PosteriorSummary s = summarize(model, x);
    r.au = active_units(s, eps_au);
    r.kl = samplewise_kl(s);
    r.mi = mutual_information(model, x, n_mc, seed);
    return r;
}

}  // namespace lrvae::metrics
