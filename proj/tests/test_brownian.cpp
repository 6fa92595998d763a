#include <doctest.h>

#include <cmath>

#include "sewing/brownian.hpp"
#include "sewing/experiments.hpp"

using namespace sewing;

TEST_CASE("constant sigma integrates the driver exactly at every mesh") {
    Mat c(1, 1);
    c(0, 0) = 1.4;
    VectorField sigma = constant_field(c);
    for (unsigned l : {3u, 5u, 7u}) {
        Partition pi = Partition::uniform(1.0, std::size_t{1} << l);
        GridRoughPath ebm = sample_ito_ebm(1, pi, 0, 17);
        SchemePath y = milstein_run(sigma, ebm, pi, Vec{0.2});
        for (std::size_t k = 0; k < pi.points.size(); ++k) {
            double b = k == 0 ? 0.0 : ebm.over(0, k).x1[0];
            CHECK(std::abs(y.values[k][0] - (0.2 + 1.4 * b)) <= 1e-12);
        }
    }
}

TEST_CASE("zero sigma freezes the path") {
    Mat c(1, 1);
    VectorField sigma = constant_field(c);
    Partition pi = Partition::uniform(1.0, 32);
    GridRoughPath ebm = sample_ito_ebm(1, pi, 0, 4);
    SchemePath y = milstein_run(sigma, ebm, pi, Vec{0.9});
    for (const auto& v : y.values) CHECK(v[0] == 0.9);
}

TEST_CASE("the scheme's own one-step remainder vanishes by construction") {
    VectorField sigma = sin_field(0.8);
    Partition pi = Partition::uniform(1.0, 64);
    GridRoughPath ebm = sample_ito_ebm(1, pi, 0, 23);
    SchemePath y = milstein_run(sigma, ebm, pi, Vec{0.5});
    for (std::size_t k = 0; k + 1 < pi.points.size(); ++k) {
        const Vec& a = y.values[k];
        Vec pred = a + matvec(sigma.eval(a), ebm.increments[k].x1) +
                   contract(f2(sigma, a), ebm.increments[k].x2);
        CHECK(norm2(y.values[k + 1] - pred) <= 1e-15);
    }
}

TEST_CASE("psi moments of a constant sigma are identically zero") {
    Mat c(1, 1);
    c(0, 0) = 0.6;
    VectorField sigma = constant_field(c);
    PsiMomentReport rep =
        psi_moment_check(sigma, Vec{0.1}, 2, {0.25, 0.125}, 40, 5, 32);
    for (const auto& r : rep.rows) CHECK(r.moment <= 1e-12);
    CHECK(rep.fitted_exponent == 0.0);
}

TEST_CASE("psi moment exponent of the linear sigma, small budget") {
    VectorField sigma = linear_scalar_field(1.0);
    PsiMomentReport rep =
        psi_moment_check(sigma, Vec{1.0}, 2, {0.25, 0.125, 0.0625, 0.03125}, 300, 7, 64);
    CHECK(rep.target_exponent == doctest::Approx(1.5));
    CHECK(rep.fitted_exponent > 1.2);
    CHECK(rep.fitted_exponent < 1.8);
}

TEST_CASE("pathwise rate regression on the geometric closed form, small budget") {
    VectorField sigma = linear_scalar_field(1.0);
    RateReport rep = rate_regression(sigma, Vec{1.0}, {4, 5, 6, 7}, 6, 11,
                                     RateReference::ClosedFormGbm, 1.0);
    CHECK(rep.meshes.size() == 4);
    CHECK(rep.slopes.size() + rep.excluded + rep.degenerate == 6);
    CHECK(rep.median_slope > 0.6);
    CHECK(rep.median_slope < 1.5);
}

TEST_CASE("constant sigma is flagged degenerate by the rate regression") {
    Mat c(1, 1);
    c(0, 0) = 1.0;
    VectorField sigma = constant_field(c);
    RateReport rep = rate_regression(sigma, Vec{0.0}, {4, 5, 6}, 3, 2,
                                     RateReference::SelfConsistent, 0.5);
    CHECK(rep.degenerate == 3);
    CHECK(rep.slopes.empty());
}

TEST_CASE("rate regression input guards") {
    VectorField sigma = linear_scalar_field(1.0);
    CHECK_THROWS_AS(rate_regression(sigma, Vec{1.0}, {4}, 2, 1,
                                    RateReference::ClosedFormGbm, 1.0),
                    std::invalid_argument);
    VectorField planar = rotation_field(1.0);
    CHECK_THROWS_AS(rate_regression(planar, Vec{1.0, 0.0}, {4, 5}, 2, 1,
                                    RateReference::ClosedFormGbm, 1.0),
                    std::invalid_argument);
}

TEST_CASE("same seed reproduces identical brownian draws") {
    Partition pi = Partition::uniform(1.0, 32);
    GridRoughPath a = sample_ito_ebm(2, pi, 2, 99);
    GridRoughPath b = sample_ito_ebm(2, pi, 2, 99);
    for (std::size_t i = 0; i < a.increments.size(); ++i) {
        CHECK(a.increments[i].x1 == b.increments[i].x1);
        CHECK(a.increments[i].x2.a == b.increments[i].x2.a);
    }
}
