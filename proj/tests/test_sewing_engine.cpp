#include <doctest.h>

#include <cmath>

#include "sewing/experiments.hpp"
#include "sewing/sewing_engine.hpp"

using namespace sewing;

TEST_CASE("the arithmetic instance of the D-solution constant") {
    CHECK(std::abs(davie_L(0.1, 1.0, 0.5) - 22.0 / 3.0) <= 1e-12);
    CHECK(consistency_A(0.1, 1.0, 1.0, 0.5) == doctest::Approx(4.8).epsilon(1e-13));
}

TEST_CASE("fixed-point identity and Chasles additivity on random schemes") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RandomRun run = random_scheme_run(seed);
        const Partition& pi = run.path.partition;
        std::size_t n = pi.points.size();
        // fixed point: y_j = a + Phi^pi_{0,j}(y)
        for (std::size_t j = 0; j < n; ++j) {
            Vec rhs = run.path.origin + phi_pi(run.phi, pi, run.path.values, 0, j);
            CHECK(norm2(run.path.values[j] - rhs) <= 1e-12);
        }
        // Chasles on sampled index triples
        KeyStream ks(seed ^ 0xabc);
        for (int q = 0; q < 15; ++q) {
            std::size_t i = static_cast<std::size_t>(ks.uniform() * (n - 2));
            std::size_t j = i + 1 + static_cast<std::size_t>(ks.uniform() * (n - i - 2));
            std::size_t k = j + static_cast<std::size_t>(ks.uniform() * (n - j));
            k = std::min(k, n - 1);
            Vec whole = phi_pi(run.phi, pi, run.path.values, i, k);
            Vec split = phi_pi(run.phi, pi, run.path.values, i, j) +
                        phi_pi(run.phi, pi, run.path.values, j, k);
            CHECK(norm2(whole - split) <= 1e-12);
        }
    }
}

TEST_CASE("phi_pi rejects bad index pairs") {
    RandomRun run = random_scheme_run(3);
    CHECK_THROWS_AS(phi_pi(run.phi, run.path.partition, run.path.values, 3, 2),
                    std::invalid_argument);
}

TEST_CASE("certified scaled-linear run passes the Davie lemma check") {
    CertifyExperiment e = davie_certification_experiment();
    CHECK(e.scaled_linear.certifying);
    CHECK(e.scaled_linear.pass);
    CHECK(e.scaled_linear.K_hat > 0.0);
    CHECK(e.scaled_linear.K_hat <= e.scaled_linear.L_bound);
    CHECK(e.constant_davie.certifying);
    CHECK(e.constant_davie.pass);
    CHECK(std::abs(e.L_arithmetic - 22.0 / 3.0) <= 1e-12);
}

TEST_CASE("hypothesis violation yields a non-certifying report") {
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder(1.2);  // kappa ~ 0.87
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    phi.env.delta = DeltaFunction{[](double h) { return h; }};  // 2 delta_T alone breaks it
    phi.env.M = 1.0;
    SchemePath y = run_scheme(phi, Partition::uniform(1.0, 16), Vec{1.0});
    DSolutionReport rep = certify_d_solution(phi, y, omega, varpi, phi.env);
    CHECK_FALSE(rep.certifying);
    CHECK_FALSE(rep.pass);
    CHECK(rep.K_hat > 0.0);  // still measured
}

TEST_CASE("consistency gap vanishes without refinement and for additive flows") {
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder(1.2);
    Mat c(1, 1);
    c(0, 0) = 0.9;
    AlmostFlow phi = euler_young_flow(constant_field(c), unit_time_driver(), 1.0);
    phi.env.delta = DeltaFunction{[](double h) { return h; }};
    Partition pi = Partition::uniform(1.0, 8);

    SchemePath same = run_scheme(phi, pi, Vec{0.2});
    ConsistencyReport r0 = consistency_gap(phi, same, pi, omega, varpi, phi.env, 0.0);
    CHECK(r0.gap <= 1e-13);

    SchemePath fine = run_scheme(phi, refine_dyadic(pi, 3), Vec{0.2});
    ConsistencyReport r3 = consistency_gap(phi, fine, pi, omega, varpi, phi.env, 0.0);
    CHECK(r3.gap <= 1e-12);  // phi_hat is state independent, sums regroup exactly
    CHECK(r3.within_budget);

    SchemePath off = run_scheme(phi, Partition::uniform(1.0, 12), Vec{0.2});
    CHECK_THROWS_AS(consistency_gap(phi, off, pi, omega, varpi, phi.env, 0.0),
                    std::invalid_argument);
}

TEST_CASE("affine consistency experiment stays within budget and shrinks") {
    ConsistencyLevels e = consistency_affine_experiment(3);
    CHECK(e.all_within);
    CHECK(e.monotone);
    CHECK(e.A_bound > 0.0);
}

TEST_CASE("sewing limit of a constant field is the first-level sum") {
    Mat c(1, 1);
    c(0, 0) = 0.6;
    AlmostFlow phi = euler_young_flow(constant_field(c), unit_time_driver(), 1.0);
    SchemePath y = run_scheme(phi, Partition::uniform(1.0, 8), Vec{0.0});
    SewingLimit lim = sewing_limit(phi, y, 0.25, 0.75, 6);
    CHECK(lim.value[0] == doctest::Approx(0.6 * 0.5).epsilon(1e-12));
    CHECK(lim.last_gap <= 1e-13);
    CHECK_FALSE(lim.diverging);
}

TEST_CASE("sewing limit matches the integral oracle for y' = y") {
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    SchemePath y = run_scheme(phi, Partition::uniform(1.0, 512), Vec{1.0});
    double s = 0.25, t = 0.75;
    SewingLimit lim = sewing_limit(phi, y, s, t, 10);
    double oracle = std::exp(t) - std::exp(s);  // int_s^t e^r dr, up to scheme error
    CHECK(std::abs(lim.value[0] - oracle) <= lim.last_gap + 5e-3);
    CHECK_FALSE(lim.diverging);
}

TEST_CASE("euler compounding approaches e at first order") {
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    double prev = -1;
    for (unsigned l = 4; l <= 8; ++l) {
        std::size_t n = std::size_t{1} << l;
        SchemePath y = run_scheme(phi, Partition::uniform(1.0, n), Vec{1.0});
        double err = std::abs(y.values.back()[0] - std::exp(1.0));
        if (prev > 0) {
            CHECK(err / prev > 0.4);
            CHECK(err / prev < 0.6);
        }
        prev = err;
    }
}

TEST_CASE("zero perturbation reproduces the base scheme") {
    AlmostFlow phi = euler_young_flow(sin_field(0.8), unit_time_driver(), 1.0);
    Perturbation zero{[](double, double, const Vec& a) { return Vec(a.size(), 0.0); }, 0.0};
    Partition pi = Partition::uniform(1.0, 32);
    SchemePath y = run_scheme(phi, pi, Vec{0.5});
    SchemePath z = perturbed_scheme(phi, zero, pi, Vec{0.5});
    for (std::size_t k = 0; k < y.values.size(); ++k)
        CHECK(y.values[k][0] == z.values[k][0]);
}

TEST_CASE("constant-field perturbations telescope exactly") {
    Mat c(1, 1);
    c(0, 0) = 0.4;
    AlmostFlow phi = euler_young_flow(constant_field(c), unit_time_driver(), 1.0);
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder(1.2);
    Perturbation eps = uniform_perturbation(0.01, omega, varpi, Vec{1.0});
    Partition pi = Partition::uniform(1.0, 16);
    SchemePath y = run_scheme(phi, pi, Vec{0.0});
    SchemePath z = perturbed_scheme(phi, eps, pi, Vec{0.0});
    double expected = 16.0 * 0.01 * varpi(1.0 / 16.0);
    CHECK(z.values.back()[0] - y.values.back()[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("uniqueness residual against the exact exponential flow") {
    auto psi = [](double s, double t, const Vec& a) { return Vec{std::exp(t - s) * a[0]}; };
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder(1.2);
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    double prev_res = 1e9;
    for (unsigned l = 4; l <= 8; ++l) {
        SchemePath y = run_scheme(phi, Partition::uniform(1.0, std::size_t{1} << l), Vec{1.0});
        UniquenessReport rep = uniqueness_residual(psi, y, omega, varpi, 3.0, 1.0, 0.5);
        CHECK(rep.residual <= rep.telescoping_bound);
        CHECK(rep.residual < prev_res);
        prev_res = rep.residual;
    }
    // the scheme's own one-step flow leaves no residual at partition points
    SchemePath y = run_scheme(phi, Partition::uniform(1.0, 4), Vec{1.0});
    auto own = [&phi, &y](double, double t, const Vec&) { return y.interpolate(t); };
    CHECK(uniqueness_residual(own, y, omega, varpi, 1.0, 1.0, 0.5).residual == 0.0);
}

TEST_CASE("escape from the working region is flagged, not fatal") {
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    SchemePath y = run_scheme(phi, Partition::uniform(1.0, 16), Vec{1.0}, 1.5);
    CHECK(y.escaped);
    CHECK(y.values.size() == 17);
}

TEST_CASE("interpolation between partition nodes is linear") {
    AlmostFlow phi = identity_flow(1);
    Partition pi = Partition::uniform(1.0, 2);
    SchemePath y;
    y.partition = pi;
    y.values = {Vec{0.0}, Vec{2.0}, Vec{2.0}};
    CHECK(y.interpolate(0.25)[0] == doctest::Approx(1.0));
    CHECK(y.interpolate(-1.0)[0] == 0.0);
    CHECK(y.interpolate(5.0)[0] == 2.0);
}
