// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lrvae/tensor.hpp"

namespace lrvae::linalg {

// All singular values of M (2-D tensor), descending, via one-sided Jacobi.
// Intended for min(p,q) <= 64; cost grows with the smaller side squared.
std::vector<double> jacobi_singular_values(const Tensor& m);

struct PowerIterResult {
    double sigma_max = 0.0;
    double sigma_min = 0.0;
};

// Power iteration on M^T M for sigma_max and inverse iteration for sigma_min.
// Deterministic start vector derived from `seed`; throws NumericError with the
// final residual if not converged within max_iters.
PowerIterResult power_iter_extremes(const Tensor& m, double tol, std::size_t max_iters,
                                    std::uint64_t seed);

// In-place Cholesky of SPD A (row-major n x n), lower factor; false if not PD.
bool cholesky(std::vector<double>& a, std::size_t n);

// Solve A x = b given the lower Cholesky factor.
void cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& x);

// log det A from its Cholesky factor.
double cholesky_logdet(const std::vector<double>& l, std::size_t n);

// Inverse of SPD A via Cholesky; throws NumericError if not PD.
Tensor spd_inverse(const Tensor& a);

// log det of SPD A; throws NumericError if not PD.
double spd_logdet(const Tensor& a);

// General square inverse by Gauss-Jordan with partial pivoting; used as an
// independent route from the Cholesky-based one. Throws NumericError if
// singular.
Tensor gauss_jordan_inverse(const Tensor& a);

// Regularized lower incomplete gamma ratio P(a, x).
double gamma_p(double a, double x);

}  // namespace lrvae::linalg
