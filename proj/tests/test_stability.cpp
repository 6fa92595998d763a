#include <doctest.h>

#include <cmath>

#include "sewing/experiments.hpp"
#include "sewing/stability.hpp"

using namespace sewing;

TEST_CASE("constant fields give a path-independent functional") {
    Mat c(1, 1);
    c(0, 0) = 0.5;
    AlmostFlow phi = euler_young_flow(constant_field(c), unit_time_driver(), 1.0);
    phi.env.delta = DeltaFunction{[](double h) { return 0.5 * h; }};
    Partition pi = Partition::uniform(1.0, 16);
    std::vector<SchemePath> paths;
    for (double a : {0.0, 0.3, -0.2}) paths.push_back(run_scheme(phi, pi, Vec{a}));
    StabilityReport rep = lipschitz_phi_pi(phi, pi, paths, linear_control(1.0),
                                           power_remainder(1.2), 0.0);
    CHECK(rep.ell_hat <= 1e-15);
    CHECK(rep.pairs == 3);
}

TEST_CASE("contraction constant shrinks with the horizon") {
    HorizonStability e = stability_horizon_experiment(4);
    CHECK(e.shrinking);
    for (std::size_t i = 0; i < e.horizons.size(); ++i) {
        CHECK(e.ell_hat[i] <= e.ell_formula[i] + 1e-12);
    }
    CHECK(e.ell_hat.back() < 1.0);  // contraction at the smallest horizon
}

TEST_CASE("scheme distance of a flow against itself from the same start") {
    AlmostFlow phi = euler_young_flow(sin_field(0.6), unit_time_driver(), 1.0);
    Partition pi = Partition::uniform(1.0, 16);
    SchemePath y = run_scheme(phi, pi, Vec{0.4});
    SchemeDistanceReport rep =
        scheme_distance(phi, phi, y, y, linear_control(1.0), power_remainder(1.2));
    CHECK(rep.lhs == 0.0);
    CHECK(rep.sup_dist == 0.0);
    CHECK(rep.a_dist == 0.0);
}

TEST_CASE("affine scheme distance propagates the start offset by the product rule") {
    double c = 0.8;
    AlmostFlow phi = euler_young_flow(linear_scalar_field(c), unit_time_driver(), 1.0);
    std::size_t n = 32;
    Partition pi = Partition::uniform(1.0, n);
    SchemePath y = run_scheme(phi, pi, Vec{1.0});
    SchemePath z = run_scheme(phi, pi, Vec{1.3});
    SchemeDistanceReport rep =
        scheme_distance(phi, phi, y, z, linear_control(1.0), power_remainder(1.2));
    double growth = std::pow(1.0 + c / double(n), double(n));
    CHECK(rep.a_dist == doctest::Approx(0.3).epsilon(1e-13));
    CHECK(rep.sup_dist == doctest::Approx(0.3 * growth).epsilon(1e-12));
    // The pairwise residual difference is maximised on the full interval:
    // |y_T - phi_{0,T}(a) - z_T + phi_{0,T}(b)| = |a-b| ((1+c/n)^n - (1+c)).
    CHECK(rep.lhs == doctest::Approx(0.3 * (growth - (1.0 + c))).epsilon(1e-10));
}

TEST_CASE("the distance regression recovers exact coefficients") {
    std::vector<double> dA{0.1, 0.2, 0.4, 0.8}, ab{0.05, 0.1, 0.1, 0.3}, sup;
    for (std::size_t i = 0; i < dA.size(); ++i) sup.push_back(2.0 * dA[i] + 3.0 * ab[i]);
    SchemeDistanceFit fit = fit_scheme_distance(dA, ab, sup);
    CHECK(fit.C == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.C_prime == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(fit_scheme_distance({1.0}, {1.0}, {1.0}), std::invalid_argument);
    // degenerate batch with one live regressor
    SchemeDistanceFit one = fit_scheme_distance({0.1, 0.2}, {0.0, 0.0}, {0.5, 1.0});
    CHECK(one.C == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(one.C_prime == 0.0);
}

TEST_CASE("lambda norm of the linear path peaks at the full interval") {
    Partition pi = Partition::uniform(1.0, 16);
    SchemePath y;
    y.partition = pi;
    y.origin = Vec{0.0};
    for (double t : pi.points) y.values.push_back(Vec{t});
    auto lam = [](double x) { return std::sqrt(x); };
    LambdaReport rep = lambda_norm(y, lam, linear_control(1.0), power_remainder(1.2), 1.0,
                                   0.4, 1.0);
    // (t-s)/sqrt(t-s) maximized at t-s = T = 1
    CHECK(rep.lambda_norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(rep.flagged);
    CHECK(rep.certified);  // 0.4 * 1 <= 1/2
    CHECK(rep.lambda_norm <= rep.bound_cont4 + 1e-12);
}

TEST_CASE("lambda norm of a constant path vanishes and degeneracy is flagged") {
    Partition pi = Partition::uniform(1.0, 8);
    SchemePath flat;
    flat.partition = pi;
    flat.origin = Vec{0.7};
    for (std::size_t i = 0; i < pi.points.size(); ++i) flat.values.push_back(Vec{0.7});
    auto lam = [](double x) { return std::sqrt(x); };
    LambdaReport rep =
        lambda_norm(flat, lam, linear_control(1.0), power_remainder(1.2), 1.0, 0.4, 1.0);
    CHECK(rep.lambda_norm == 0.0);

    SchemePath moving = flat;
    moving.values.back() = Vec{1.7};
    auto zero = [](double) { return 0.0; };
    LambdaReport bad =
        lambda_norm(moving, zero, linear_control(1.0), power_remainder(1.2), 1.0, 0.4, 1.0);
    CHECK(bad.flagged);
}

TEST_CASE("mollification shrinks the flow distance monotonically") {
    MollifyLadder e = mollify_ladder_experiment(0.5, 1, 4, 42);
    CHECK(e.decreasing);
    CHECK(e.fit.C > 0.0);
    for (double d : e.dA) CHECK(d > 0.0);
}
