// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>

namespace lrvae::kernels {

// Dense f64 kernels behind every tensor op. One scalar reference table plus a
// runtime-selected AVX2 table; the two are equivalence-tested against a long
// double oracle. All matmul variants produce C[m x n] with contraction dim k;
// when `acc` is false C is overwritten, otherwise accumulated into.
struct Ops {
    const char* name;

    // C = A[m x k] * B[k x n]
    void (*matmul_nn)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc);
    // C = A^T * B with A[k x m], B[k x n]
    void (*matmul_tn)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc);
    // C = A * B^T with A[m x k], B[n x k]
    void (*matmul_nt)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool acc);

    void (*axpy)(double a, const double* x, double* y, std::size_t n);  // y += a*x
    void (*scale)(double a, double* x, std::size_t n);                  // x *= a
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sq_dist)(const double* x, const double* y, std::size_t n);  // sum (x-y)^2

    // Fused Adam update; c1 = 1/(1-b1^t), c2 = 1/(1-b2^t).
    void (*adam_step)(double* p, const double* g, double* m, double* v,
                      std::size_t n, double lr, double b1, double b2,
                      double eps, double c1, double c2);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when the build or CPU lacks AVX2+FMA

// Active table. Resolved on first use: LRVAE_KERNELS env var ("scalar",
// "avx2", "auto") wins, otherwise best supported. select_backend returns
// false if the request cannot be honored (e.g. avx2 on a non-AVX2 CPU).
const Ops& active();
bool select_backend(std::string_view name);

}  // namespace lrvae::kernels
