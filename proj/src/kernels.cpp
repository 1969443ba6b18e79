// SPDX-License-Identifier: Apache-2.0
#include "lrvae/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

namespace lrvae::kernels {

namespace {

void s_matmul_nn(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        if (!acc) std::memset(crow, 0, n * sizeof(double));
        const double* arow = a + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double al = arow[l];
            const double* brow = b + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += al * brow[j];
        }
    }
}

void s_matmul_tn(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool acc) {
    if (!acc) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t l = 0; l < k; ++l) {
        const double* arow = a + l * m;
        const double* brow = b + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double ali = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += ali * brow[j];
        }
    }
}

void s_matmul_nt(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += arow[l] * brow[l];
            if (acc) crow[j] += s; else crow[j] = s;
        }
    }
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_sub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double s_sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double s_dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double s_sq_dist(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

void s_adam_step(double* p, const double* g, double* m, double* v,
                 std::size_t n, double lr, double b1, double b2,
                 double eps, double c1, double c2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mh = m[i] * c1;
        const double vh = v[i] * c2;
        p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

const Ops kScalar = {
    "scalar",
    s_matmul_nn, s_matmul_tn, s_matmul_nt,
    s_axpy, s_scale, s_add, s_sub, s_mul,
    s_sum, s_dot, s_sq_dist, s_adam_step,
};

std::atomic<const Ops*> g_active{nullptr};

const Ops* detect() {
    const Ops* best = &kScalar;
    if (const Ops* v = avx2_ops()) best = v;
    if (const char* env = std::getenv("LRVAE_KERNELS")) {
        std::string req(env);
        if (req == "scalar") return &kScalar;
        if (req == "avx2" && avx2_ops()) return avx2_ops();
        // "auto" or unhonorable request: fall through to best supported
    }
    return best;
}

}  // namespace

const Ops& scalar_ops() { return kScalar; }

#ifndef LRVAE_HAVE_AVX2
const Ops* avx2_ops() { return nullptr; }
#endif

const Ops& active() {
    const Ops* cur = g_active.load(std::memory_order_acquire);
    if (!cur) {
        cur = detect();
        g_active.store(cur, std::memory_order_release);
    }
    return *cur;
}

bool select_backend(std::string_view name) {
    if (name == "scalar") {
        g_active.store(&kScalar, std::memory_order_release);
        return true;
    }
    if (name == "avx2") {
        if (const Ops* v = avx2_ops()) {
            g_active.store(v, std::memory_order_release);
            return true;
        }
        return false;
    }
    if (name == "auto") {
        g_active.store(detect(), std::memory_order_release);
        return true;
    }
    return false;
}

}  // namespace lrvae::kernels
