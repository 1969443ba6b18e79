// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA variants of the f64 kernels. Compiled with -mavx2 -mfma in its own
// translation unit; reached only through the runtime-dispatched Ops table.
#include "lrvae/kernels.hpp"

#include <cmath>
#include <cstring>
#include <immintrin.h>

namespace lrvae::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// Rank-1 row updates, 4 rows of C per pass so each B row is loaded once per
// four accumulations.
void v_matmul_nn(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool acc) {
    if (!acc) std::memset(c, 0, m * n * sizeof(double));
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const double* a0 = a + (i + 0) * k;
        const double* a1 = a + (i + 1) * k;
        const double* a2 = a + (i + 2) * k;
        const double* a3 = a + (i + 3) * k;
        double* c0 = c + (i + 0) * n;
        double* c1 = c + (i + 1) * n;
        double* c2 = c + (i + 2) * n;
        double* c3 = c + (i + 3) * n;
        for (std::size_t l = 0; l < k; ++l) {
            const __m256d s0 = _mm256_set1_pd(a0[l]);
            const __m256d s1 = _mm256_set1_pd(a1[l]);
            const __m256d s2 = _mm256_set1_pd(a2[l]);
            const __m256d s3 = _mm256_set1_pd(a3[l]);
            const double* brow = b + l * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d bv = _mm256_loadu_pd(brow + j);
                _mm256_storeu_pd(c0 + j, _mm256_fmadd_pd(s0, bv, _mm256_loadu_pd(c0 + j)));
                _mm256_storeu_pd(c1 + j, _mm256_fmadd_pd(s1, bv, _mm256_loadu_pd(c1 + j)));
                _mm256_storeu_pd(c2 + j, _mm256_fmadd_pd(s2, bv, _mm256_loadu_pd(c2 + j)));
                _mm256_storeu_pd(c3 + j, _mm256_fmadd_pd(s3, bv, _mm256_loadu_pd(c3 + j)));
            }
            for (; j < n; ++j) {
                c0[j] += a0[l] * brow[j];
                c1[j] += a1[l] * brow[j];
                c2[j] += a2[l] * brow[j];
                c3[j] += a3[l] * brow[j];
            }
        }
    }
    for (; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const __m256d s = _mm256_set1_pd(arow[l]);
            const double* brow = b + l * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4)
                _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(s, _mm256_loadu_pd(brow + j),
                                                           _mm256_loadu_pd(crow + j)));
            for (; j < n; ++j) crow[j] += arow[l] * brow[j];
        }
    }
}

// C[m x n] = A^T B, A[k x m]: four shared-dim rows per pass.
void v_matmul_tn(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool acc) {
    if (!acc) std::memset(c, 0, m * n * sizeof(double));
    std::size_t l = 0;
    for (; l + 4 <= k; l += 4) {
        const double* a0 = a + (l + 0) * m;
        const double* a1 = a + (l + 1) * m;
        const double* a2 = a + (l + 2) * m;
        const double* a3 = a + (l + 3) * m;
        const double* b0 = b + (l + 0) * n;
        const double* b1 = b + (l + 1) * n;
        const double* b2 = b + (l + 2) * n;
        const double* b3 = b + (l + 3) * n;
        for (std::size_t i = 0; i < m; ++i) {
            const __m256d s0 = _mm256_set1_pd(a0[i]);
            const __m256d s1 = _mm256_set1_pd(a1[i]);
            const __m256d s2 = _mm256_set1_pd(a2[i]);
            const __m256d s3 = _mm256_set1_pd(a3[i]);
            double* crow = c + i * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d cv = _mm256_loadu_pd(crow + j);
                cv = _mm256_fmadd_pd(s0, _mm256_loadu_pd(b0 + j), cv);
                cv = _mm256_fmadd_pd(s1, _mm256_loadu_pd(b1 + j), cv);
                cv = _mm256_fmadd_pd(s2, _mm256_loadu_pd(b2 + j), cv);
                cv = _mm256_fmadd_pd(s3, _mm256_loadu_pd(b3 + j), cv);
                _mm256_storeu_pd(crow + j, cv);
            }
            for (; j < n; ++j)
                crow[j] += a0[i] * b0[j] + a1[i] * b1[j] + a2[i] * b2[j] + a3[i] * b3[j];
        }
    }
    for (; l < k; ++l) {
        const double* arow = a + l * m;
        const double* brow = b + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            const __m256d s = _mm256_set1_pd(arow[i]);
            double* crow = c + i * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4)
                _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(s, _mm256_loadu_pd(brow + j),
                                                           _mm256_loadu_pd(crow + j)));
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

// C[m x n] = A B^T: row-by-row dot products, two B rows in flight.
void v_matmul_nt(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        std::size_t j = 0;
        for (; j + 2 <= n; j += 2) {
            const double* b0 = b + (j + 0) * k;
            const double* b1 = b + (j + 1) * k;
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            std::size_t l = 0;
            for (; l + 4 <= k; l += 4) {
                const __m256d av = _mm256_loadu_pd(arow + l);
                acc0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + l), acc0);
                acc1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + l), acc1);
            }
            double s0 = hsum(acc0), s1 = hsum(acc1);
            for (; l < k; ++l) {
                s0 += arow[l] * b0[l];
                s1 += arow[l] * b1[l];
            }
            if (acc) {
                crow[j] += s0;
                crow[j + 1] += s1;
            } else {
                crow[j] = s0;
                crow[j + 1] = s1;
            }
        }
        for (; j < n; ++j) {
            const double* brow = b + j * k;
            __m256d av = _mm256_setzero_pd();
            std::size_t l = 0;
            for (; l + 4 <= k; l += 4)
                av = _mm256_fmadd_pd(_mm256_loadu_pd(arow + l), _mm256_loadu_pd(brow + l), av);
            double s = hsum(av);
            for (; l < k; ++l) s += arow[l] * brow[l];
            if (acc) crow[j] += s; else crow[j] = s;
        }
    }
}

void v_axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_scale(double a, double* x, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void v_add(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_sub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void v_mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double v_sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double v_dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double v_sq_dist(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

void v_adam_step(double* p, const double* g, double* m, double* v,
                 std::size_t n, double lr, double b1, double b2,
                 double eps, double c1, double c2) {
    const __m256d b1v = _mm256_set1_pd(b1);
    const __m256d b2v = _mm256_set1_pd(b2);
    const __m256d ob1 = _mm256_set1_pd(1.0 - b1);
    const __m256d ob2 = _mm256_set1_pd(1.0 - b2);
    const __m256d c1v = _mm256_set1_pd(c1);
    const __m256d c2v = _mm256_set1_pd(c2);
    const __m256d lrv = _mm256_set1_pd(lr);
    const __m256d epsv = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        mv = _mm256_fmadd_pd(b1v, mv, _mm256_mul_pd(ob1, gv));
        vv = _mm256_fmadd_pd(b2v, vv, _mm256_mul_pd(ob2, _mm256_mul_pd(gv, gv)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mh = _mm256_mul_pd(mv, c1v);
        const __m256d vh = _mm256_mul_pd(vv, c2v);
        const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vh), epsv);
        const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lrv, mh), den);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mh = m[i] * c1;
        const double vh = v[i] * c2;
        p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

const Ops kAvx2 = {
    "avx2",
    v_matmul_nn, v_matmul_tn, v_matmul_nt,
    v_axpy, v_scale, v_add, v_sub, v_mul,
    v_sum, v_dot, v_sq_dist, v_adam_step,
};

}  // namespace

const Ops* avx2_ops() {
#if defined(__x86_64__)
    static const bool ok =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

}  // namespace lrvae::kernels
