// SPDX-License-Identifier: Apache-2.0
#include "lrvae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lrvae/kernels.hpp"
#include "lrvae/rng.hpp"

namespace lrvae::linalg {

namespace {

// Columns of the working copy are orthogonalized in place; singular values
// are the final column norms.
std::vector<double> one_sided_jacobi(std::vector<double> a, std::size_t p, std::size_t q) {
    const double tol = 1e-14;
    const std::size_t max_sweeps = 60;
    auto col = [&](std::size_t j) { return a.data() + j; };  // stride q
    auto coldot = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        const double* ci = col(i);
        const double* cj = col(j);
        for (std::size_t r = 0; r < p; ++r) s += ci[r * q] * cj[r * q];
        return s;
    };
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < q; ++i) {
            for (std::size_t j = i + 1; j < q; ++j) {
                const double aii = coldot(i, i);
                const double ajj = coldot(j, j);
                const double aij = coldot(i, j);
                if (aii == 0.0 || ajj == 0.0) continue;
                if (std::abs(aij) <= tol * std::sqrt(aii * ajj)) continue;
                rotated = true;
                const double tau = (ajj - aii) / (2.0 * aij);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                double* ci = col(i);
                double* cj = col(j);
                for (std::size_t r = 0; r < p; ++r) {
                    const double vi = ci[r * q];
                    const double vj = cj[r * q];
                    ci[r * q] = c * vi - s * vj;
                    cj[r * q] = s * vi + c * vj;
                }
            }
        }
        if (!rotated) break;
    }
    std::vector<double> sv(q);
    for (std::size_t j = 0; j < q; ++j) sv[j] = std::sqrt(coldot(j, j));
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

}  // namespace

std::vector<double> jacobi_singular_values(const Tensor& m) {
    if (m.rank() != 2) throw ShapeError("jacobi_singular_values: expected 2-D tensor");
    m.check_finite("jacobi_singular_values input");
    const std::size_t p = m.rows(), q = m.cols();
    if (p >= q) return one_sided_jacobi(m.vec(), p, q);
    // Work on the transpose so columns are the short side.
    std::vector<double> at(p * q);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < q; ++j) at[j * p + i] = m(i, j);
    return one_sided_jacobi(std::move(at), q, p);
}

PowerIterResult power_iter_extremes(const Tensor& m, double tol, std::size_t max_iters,
                                    std::uint64_t seed) {
    if (m.rank() != 2) throw ShapeError("power_iter_extremes: expected 2-D tensor");
    const std::size_t p = m.rows(), q = m.cols();
    // Gram matrix on the short side.
    const std::size_t n = std::min(p, q);
    Tensor g({n, n});
    if (q <= p)
        kernels::active().matmul_tn(m.data(), m.data(), g.data(), q, p, q, false);
    else
        kernels::active().matmul_nt(m.data(), m.data(), g.data(), p, q, p, false);

    Rng rng(seed, 0x9077ULL);
    std::vector<double> v(n), w(n);
    for (auto& x : v) x = rng.normal();

    auto normalize = [&](std::vector<double>& x) {
        double nrm = std::sqrt(kernels::active().dot(x.data(), x.data(), n));
        for (auto& e : x) e /= nrm;
        return nrm;
    };
    normalize(v);

    PowerIterResult out;
    // sigma_max via power iteration on G
    double lam = 0.0;
    bool converged = false;
    for (std::size_t it = 0; it < max_iters; ++it) {
        kernels::active().matmul_nn(g.data(), v.data(), w.data(), n, n, 1, false);
        // w = G v with v as a column: reuse matmul with n x n times n x 1
        const double lam_new = kernels::active().dot(v.data(), w.data(), n);
        normalize(w);
        std::swap(v, w);
        if (it > 0 && std::abs(lam_new - lam) <= tol * std::max(1.0, std::abs(lam_new))) {
            lam = lam_new;
            converged = true;
            break;
        }
        lam = lam_new;
    }
    if (!converged) {
        std::ostringstream os;
        os << "power iteration did not converge; last eigenvalue " << lam;
        throw NumericError(os.str());
    }
    out.sigma_max = std::sqrt(std::max(lam, 0.0));

    // sigma_min via inverse iteration: factor G once, iterate y = G^{-1} v.
    std::vector<double> l = g.vec();
    if (!cholesky(l, n)) {
        out.sigma_min = 0.0;  // numerically singular Gram matrix
        return out;
    }
    for (auto& x : v) x = rng.normal();
    normalize(v);
    double mu = 0.0;
    converged = false;
    for (std::size_t it = 0; it < max_iters; ++it) {
        w = v;
        cholesky_solve(l, n, w);
        const double mu_new = kernels::active().dot(v.data(), w.data(), n);
        normalize(w);
        std::swap(v, w);
        if (it > 0 && std::abs(mu_new - mu) <= tol * std::max(1.0, std::abs(mu_new))) {
            mu = mu_new;
            converged = true;
            break;
        }
        mu = mu_new;
    }
    if (!converged) {
        std::ostringstream os;
        os << "inverse iteration did not converge; last eigenvalue " << mu;
        throw NumericError(os.str());
    }
    out.sigma_min = mu > 0.0 ? std::sqrt(1.0 / mu) : 0.0;
    return out;
}

bool cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
        for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
    }
    return true;
}

void cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& x) {
    // forward: L y = x
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
        x[i] = s / l[i * n + i];
    }
    // backward: L^T z = y
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x[k];
        x[ii] = s / l[ii * n + ii];
    }
}

double cholesky_logdet(const std::vector<double>& l, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::log(l[i * n + i]);
    return 2.0 * s;
}

Tensor spd_inverse(const Tensor& a) {
    if (a.rank() != 2 || a.rows() != a.cols())
        throw ShapeError("spd_inverse: expected square matrix, got " + a.shape_str());
    const std::size_t n = a.rows();
    std::vector<double> l = a.vec();
    if (!cholesky(l, n)) throw NumericError("spd_inverse: matrix not positive definite");
    Tensor inv({n, n});
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        cholesky_solve(l, n, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = e[i];
    }
    return inv;
}

double spd_logdet(const Tensor& a) {
    if (a.rank() != 2 || a.rows() != a.cols())
        throw ShapeError("spd_logdet: expected square matrix, got " + a.shape_str());
    const std::size_t n = a.rows();
    std::vector<double> l = a.vec();
    if (!cholesky(l, n)) throw NumericError("spd_logdet: matrix not positive definite");
    return cholesky_logdet(l, n);
}

Tensor gauss_jordan_inverse(const Tensor& a) {
    if (a.rank() != 2 || a.rows() != a.cols())
        throw ShapeError("gauss_jordan_inverse: expected square matrix");
    const std::size_t n = a.rows();
    std::vector<double> m = a.vec();
    Tensor inv = Tensor::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
        if (m[piv * n + col] == 0.0) throw NumericError("gauss_jordan_inverse: singular matrix");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m[piv * n + j], m[col * n + j]);
                std::swap(inv(piv, j), inv(col, j));
            }
        }
        const double d = m[col * n + col];
        for (std::size_t j = 0; j < n; ++j) {
            m[col * n + j] /= d;
            inv(col, j) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = m[r * n + col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m[r * n + j] -= f * m[col * n + j];
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

namespace {

double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw ContractError("gamma_p: requires a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

}  // namespace lrvae::linalg
