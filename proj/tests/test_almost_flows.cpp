#include <doctest.h>

#include <cmath>

#include "sewing/almost_flow.hpp"
#include "sewing/experiments.hpp"

using namespace sewing;

namespace {

/// Exact level-2 lift of x_t = t on an arbitrary grid: x1 = u, x2 = u^2/2.
GridRoughPath exact_time_lift(const Partition& grid) {
    GridRoughPath x;
    x.grid = grid;
    x.dim = 1;
    x.p = 2.0;
    for (std::size_t i = 0; i + 1 < grid.points.size(); ++i) {
        double u = grid.points[i + 1] - grid.points[i];
        RoughIncrement inc = RoughIncrement::zero(1);
        inc.x1[0] = u;
        inc.x2(0, 0) = 0.5 * u * u;
        x.increments.push_back(inc);
    }
    return x;
}

}  // namespace

TEST_CASE("davie flow of a constant field has zero defect") {
    Mat c(1, 1);
    c(0, 0) = 0.8;
    GridRoughPath x = sample_ito_ebm(1, Partition::uniform(1.0, 16), 0, 3);
    AlmostFlow phi = davie_flow(constant_field(c), x);
    for (std::size_t i = 0; i < 14; ++i) {
        Vec d = phi.dphi(x.grid.points[i], x.grid.points[i + 1], x.grid.points[i + 2], Vec{0.4});
        CHECK(std::abs(d[0]) <= 1e-13);
    }
}

TEST_CASE("davie defect matches the symbolic second-order oracle") {
    double u = 0.3, v = 0.2, w = u + v;
    Partition grid(std::vector<double>{0.0, u, w});
    GridRoughPath x = exact_time_lift(grid);
    AlmostFlow phi = davie_flow(linear_scalar_field(1.0), x);
    for (double a : {-1.0, 0.5, 2.0}) {
        double oracle = a * ((1 + u + u * u / 2) * (1 + v + v * v / 2) - (1 + w + w * w / 2));
        Vec d = phi.dphi(0.0, u, w, Vec{a});
        CHECK(d[0] == doctest::Approx(oracle).epsilon(1e-13));
    }
}

TEST_CASE("euler defect for the linear field is a uv") {
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    double u = 0.25, v = 0.1;
    for (double a : {-2.0, 1.3}) {
        Vec d = phi.dphi(0.0, u, u + v, Vec{a});
        CHECK(d[0] == doctest::Approx(a * u * v).epsilon(1e-13));
    }
}

TEST_CASE("flow constructor guards") {
    GridRoughPath x = sample_ito_ebm(1, Partition::uniform(1.0, 4), 0, 1);
    VectorField noderiv;
    noderiv.eval = [](const Vec&) { return Mat(1, 1); };
    CHECK_THROWS_AS(davie_flow(noderiv, x), std::invalid_argument);
    GridRoughPath bad = x;
    bad.p = 3.5;
    CHECK_THROWS_AS(davie_flow(linear_scalar_field(1.0), bad), std::invalid_argument);
    GridRoughPath x2d = sample_ito_ebm(2, Partition::uniform(1.0, 4), 0, 1);
    CHECK_THROWS_AS(davie_flow(linear_scalar_field(1.0), x2d), std::invalid_argument);
    // Young regularity budget: alpha (1 + gamma) must exceed 1
    VectorField rough = rough_field(0.3);
    CHECK_THROWS_AS(euler_young_flow(rough, unit_time_driver(), 0.5), std::invalid_argument);
}

TEST_CASE("measured defect constant respects the analytic bound") {
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder(2.0);
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    phi.env.delta = DeltaFunction{[](double h) { return h; }};
    auto samples = sample_simplex(Partition::uniform(1.0, 32), 2.0, 1, 300, 5);
    DefectReport rep = defect(phi, omega, varpi, samples);
    // |a uv| / (u+v)^2 <= |a|/4 <= 0.5 on the sampled ball
    CHECK(rep.M_hat > 0.0);
    CHECK(rep.M_hat <= 0.5 + 1e-12);
    CHECK_FALSE(rep.degenerate);
    CHECK(rep.samples == 300);
}

TEST_CASE("d_A of a flow with itself vanishes") {
    AlmostFlow phi = euler_young_flow(sin_field(0.7), unit_time_driver(), 1.0);
    auto samples = sample_simplex(Partition::uniform(1.0, 16), 1.0, 1, 100, 9);
    FlowDistance d = d_A(phi, phi, linear_control(1.0), power_remainder(1.2), samples);
    CHECK(d.value() == 0.0);
}

TEST_CASE("four-point control of an affine flow") {
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    auto samples = sample_simplex(Partition::uniform(1.0, 16), 1.0, 1, 200, 17);
    FourPointReport rep = four_point(phi, linear_control(1.0), power_remainder(1.2), samples);
    // second differences of a linear map vanish identically
    for (double ps : rep.phi_star) CHECK(ps <= 1e-10);
    // Lipschitz constant of a -> a(1 + (t-s)) is 1 + (t-s) <= 2
    CHECK(rep.lip_excess >= 1.0 - 1e-12);
    CHECK(rep.lip_excess <= 2.0 + 1e-12);
}

TEST_CASE("uniform perturbation has the declared scale") {
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder(1.2);
    Perturbation eps = uniform_perturbation(0.05, omega, varpi, Vec{2.0});
    Vec e = eps(0.2, 0.7, Vec{0.0});
    CHECK(norm2(e) == doctest::Approx(0.05 * varpi(0.5)).epsilon(1e-13));
    auto samples = sample_simplex(Partition::uniform(1.0, 16), 1.0, 1, 100, 23);
    CHECK(estimate_eta(eps, omega, varpi, samples) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("quantization error is bounded by half a grid cell") {
    AlmostFlow phi = euler_young_flow(sin_field(1.0), unit_time_driver(), 1.0);
    unsigned bits = 12;
    Perturbation eps = quantization_perturbation(phi, bits);
    double q = std::pow(2.0, -double(bits));
    KeyStream ks(31);
    for (int i = 0; i < 50; ++i) {
        double s = ks.uniform(0.0, 0.5), t = s + ks.uniform(0.01, 0.5);
        Vec e = eps(s, t, Vec{ks.uniform(-2.0, 2.0)});
        CHECK(norm2(e) <= q / 2 + 1e-15);
    }
}

TEST_CASE("perturbed envelope follows the inflation rule") {
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    phi.env.delta = DeltaFunction{[](double h) { return 0.2 * h; }};
    phi.env.M = 0.3;
    Perturbation eps = uniform_perturbation(0.5, linear_control(1.0), power_remainder(1.2),
                                            Vec{1.0});
    AlmostFlow psi = perturb(phi, eps, 1.0);
    double delta_T = 0.2;
    CHECK(psi.env.delta(1.0) == doctest::Approx(0.2 * 1.5).epsilon(1e-13));
    CHECK(psi.env.M == doctest::Approx(0.3 + (2.0 + delta_T) * 0.5).epsilon(1e-13));
    Vec v = psi(0.0, 0.5, Vec{1.0});
    Vec w = phi(0.0, 0.5, Vec{1.0}) + eps(0.0, 0.5, Vec{1.0});
    CHECK(v[0] == doctest::Approx(w[0]));
}

TEST_CASE("simplex samples are ordered and inside the ball") {
    auto samples = sample_simplex(Partition::uniform(1.0, 32), 1.5, 3, 200, 41);
    REQUIRE(samples.size() == 200);
    for (const auto& s : samples) {
        CHECK(s.r <= s.s);
        CHECK(s.s <= s.t);
        for (double v : s.a) CHECK(std::abs(v) <= 1.5);
    }
}
