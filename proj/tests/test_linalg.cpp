// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>

#include "lrvae/linalg.hpp"
#include "support/testutil.hpp"

#ifdef LRVAE_TEST_HAVE_EIGEN
#include <Eigen/Dense>
#include <Eigen/SVD>
#endif

using namespace lrvae;
using testutil::random_tensor;

TEST_SUITE_BEGIN("linalg");

TEST_CASE("jacobi singular values on identity and diagonal") {
    auto sv = linalg::jacobi_singular_values(Tensor::identity(3));
    CHECK(sv.size() == 3);
    for (double s : sv) CHECK(s == doctest::Approx(1.0).epsilon(1e-14));

    Tensor d({2, 2}, {3.0, 0.0, 0.0, 1.0});
    sv = linalg::jacobi_singular_values(d);
    CHECK(sv[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(sv[1] == doctest::Approx(1.0).epsilon(1e-14));
}

#ifdef LRVAE_TEST_HAVE_EIGEN
namespace {
std::vector<double> eigen_singular_values(const Tensor& m) {
    Eigen::MatrixXd em(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) em(i, j) = m(i, j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(em);
    std::vector<double> out(svd.singularValues().data(),
                            svd.singularValues().data() + svd.singularValues().size());
    return out;
}
}  // namespace

TEST_CASE("jacobi SVD matches Eigen on random matrices (both orientations)") {
    Rng rng(3);
    for (auto [p, q] : std::vector<std::pair<std::size_t, std::size_t>>{
             {20, 8}, {8, 20}, {5, 5}, {64, 3}, {1, 7}}) {
        Tensor m = random_tensor({p, q}, rng);
        auto mine = linalg::jacobi_singular_values(m);
        auto ref = eigen_singular_values(m);
        REQUIRE(mine.size() == ref.size());
        for (std::size_t i = 0; i < mine.size(); ++i)
            CHECK(std::abs(mine[i] - ref[i]) <= 1e-8 * std::max(1.0, ref[0]));
    }
}

TEST_CASE("power/inverse iteration extremes match Eigen on a 100x80 matrix") {
    Rng rng(5);
    Tensor m = random_tensor({100, 80}, rng);
    auto pr = linalg::power_iter_extremes(m, 1e-12, 100000, 1);
    auto ref = eigen_singular_values(m);
    CHECK(testutil::rel_err(pr.sigma_max, ref.front()) <= 1e-6);
    CHECK(testutil::rel_err(pr.sigma_min, ref.back()) <= 1e-6);
}
#endif

TEST_CASE("power iteration reports non-convergence with the residual") {
    Rng rng(9);
    Tensor m = random_tensor({70, 65}, rng);
    CHECK_THROWS_AS(linalg::power_iter_extremes(m, 1e-16, 2, 1), NumericError);
}

TEST_CASE("spd inverse and logdet") {
    Rng rng(7);
    const std::size_t n = 6;
    Tensor b = random_tensor({n, n}, rng);
    Tensor a({n, n});
    // A = B^T B + I is SPD
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = i == j ? 1.0 : 0.0;
            for (std::size_t k = 0; k < n; ++k) s += b(k, i) * b(k, j);
            a(i, j) = s;
        }
    Tensor inv = linalg::spd_inverse(a);
    Tensor gj = linalg::gauss_jordan_inverse(a);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += a(i, k) * inv(k, j);
            CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) <= 1e-10);
            CHECK(std::abs(inv(i, j) - gj(i, j)) <= 1e-9);
        }
    // det(A) * det(A^-1) = 1
    CHECK(std::abs(linalg::spd_logdet(a) + linalg::spd_logdet(inv)) <= 1e-9);

    Tensor notpd({2, 2}, {1.0, 2.0, 2.0, 1.0});
    CHECK_THROWS_AS(linalg::spd_inverse(notpd), NumericError);
}

TEST_CASE("regularized incomplete gamma ratio") {
    // P(1/2, 1/2) = erf(1/sqrt(2)) = Pr(|Z| <= 1)
    CHECK(linalg::gamma_p(0.5, 0.5) == doctest::Approx(0.6826894921370859).epsilon(1e-12));
    // P(1, x) = 1 - exp(-x)
    for (double x : {0.1, 1.0, 3.5, 20.0})
        CHECK(linalg::gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
    // chi^2_4 median is about 3.3567
    CHECK(linalg::gamma_p(2.0, 3.356694 / 2.0) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(linalg::gamma_p(0.5, 0.0) == 0.0);
    CHECK_THROWS_AS(linalg::gamma_p(-1.0, 1.0), ContractError);
}

TEST_SUITE_END();
