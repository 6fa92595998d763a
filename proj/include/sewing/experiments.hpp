#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "sewing/almost_flow.hpp"
#include "sewing/brownian.hpp"
#include "sewing/control.hpp"
#include "sewing/rough_path.hpp"
#include "sewing/sewing_engine.hpp"
#include "sewing/stability.hpp"
#include "sewing/stats.hpp"
#include "sewing/vector_field.hpp"

namespace sewing {

inline constexpr double kPi = 3.14159265358979323846;

// -- canonical drivers --

inline std::function<Vec(double)> unit_time_driver() {
    return [](double t) { return Vec{t}; };
}

/// Truncated lacunary cosine series: alpha-Hoelder but nowhere smoother, a
/// desk-scale stand-in for a genuinely rough deterministic driver.
inline std::function<Vec(double)> weierstrass_driver(double alpha, unsigned terms = 14) {
    return [alpha, terms](double t) {
        double s = 0;
        for (unsigned k = 0; k < terms; ++k)
            s += std::pow(2.0, -alpha * double(k)) * std::cos(std::pow(2.0, double(k)) * kPi * t);
        return Vec{s};
    };
}

/// Rough-path lift of a smooth scalar function by fine left-point sums.
inline GridRoughPath lift_function(const std::function<double(double)>& x, const Partition& target,
                                   unsigned extra_levels = 6) {
    Partition fine = refine_dyadic(target, extra_levels);
    std::vector<Vec> vals;
    vals.reserve(fine.points.size());
    for (double t : fine.points) vals.push_back(Vec{x(t)});
    return lift_smooth(vals, fine, target);
}

// -- deterministic convergence experiments --

struct ConvergeReport {
    std::vector<double> meshes;
    std::vector<double> errors;
    LinearFit fit;
};

/// Euler scheme for y' = y against e^t: classical first-order anchor.
inline ConvergeReport euler_exponential_rate(unsigned lo = 4, unsigned hi = 12) {
    VectorField f = linear_scalar_field(1.0);
    AlmostFlow phi = euler_young_flow(f, unit_time_driver(), 1.0);
    ConvergeReport rep;
    for (unsigned l = lo; l <= hi; ++l) {
        std::size_t n = std::size_t{1} << l;
        SchemePath y = run_scheme(phi, Partition::uniform(1.0, n), Vec{1.0});
        rep.meshes.push_back(1.0 / double(n));
        rep.errors.push_back(std::abs(y.values.back()[0] - std::exp(1.0)));
    }
    rep.fit = loglog_fit(rep.meshes, rep.errors);
    return rep;
}

/// Euler scheme for y' = y dx on the lacunary driver, measured against the
/// same scheme on a finer grid (closed forms are unavailable here).
inline ConvergeReport young_weierstrass_rate(double alpha = 0.75, unsigned lo = 4,
                                             unsigned levels = 5, unsigned ref_factor = 4) {
    VectorField f = linear_scalar_field(1.0);
    auto drv = weierstrass_driver(alpha);
    AlmostFlow phi = euler_young_flow(f, drv, alpha);
    unsigned hi = lo + levels - 1;
    std::size_t nref = (std::size_t{1} << hi) * ref_factor;
    SchemePath ref = run_scheme(phi, Partition::uniform(1.0, nref), Vec{1.0});
    ConvergeReport rep;
    for (unsigned l = lo; l <= hi; ++l) {
        std::size_t n = std::size_t{1} << l;
        SchemePath y = run_scheme(phi, Partition::uniform(1.0, n), Vec{1.0});
        std::size_t stride = nref / n;
        double e = 0;
        for (std::size_t k = 0; k <= n; ++k)
            e = std::max(e, std::abs(y.values[k][0] - ref.values[k * stride][0]));
        rep.meshes.push_back(1.0 / double(n));
        rep.errors.push_back(e);
    }
    rep.fit = loglog_fit(rep.meshes, rep.errors);
    return rep;
}

// -- D-solution certification experiment --

struct CertifyExperiment {
    DSolutionReport scaled_linear;   // certified envelope, nontrivial dynamics
    DSolutionReport constant_davie;  // exact scheme, slack envelope
    double L_arithmetic = 0.0;       // L at (delta_T, M, kappa) = (0.1, 1, 0.5)
};

/// Two library runs with certified envelopes plus the arithmetic instance
/// of the L formula.
inline CertifyExperiment davie_certification_experiment() {
    CertifyExperiment out;
    out.L_arithmetic = davie_L(0.1, 1.0, 0.5);

    {
        // f(a) = 0.2 a on the time driver; T = 0.5, kappa = 0.5 via varpi = x^2
        Control omega = linear_control(0.5);
        Remainder varpi = power_remainder(2.0);
        AlmostFlow phi = euler_young_flow(linear_scalar_field(0.2), unit_time_driver(), 1.0);
        phi.env.delta = DeltaFunction{[](double h) { return 0.25 * h; }};
        phi.env.M = 0.02;
        SchemePath y = run_scheme(phi, Partition::uniform(0.5, 64), Vec{1.0});
        out.scaled_linear = certify_d_solution(phi, y, omega, varpi, phi.env);
    }
    {
        Control omega = linear_control(1.0);
        Remainder varpi = power_remainder(2.0);
        Mat c(1, 1);
        c(0, 0) = 0.7;
        Partition grid = Partition::uniform(1.0, 32);
        GridRoughPath x = sample_ito_ebm(1, grid, 0, 0xeb);
        AlmostFlow phi = davie_flow(constant_field(c), x);
        phi.env.M = 0.01;  // slack certificate; true defect is zero
        SchemePath y = run_scheme(phi, grid, Vec{0.3});
        out.constant_davie = certify_d_solution(phi, y, omega, varpi, phi.env);
    }
    return out;
}

// -- consistency across dyadic refinements --

struct ConsistencyLevels {
    double A_bound = 0.0;
    double K_used = 0.0;
    std::vector<double> gaps;
    std::vector<double> worst_budgets;
    bool all_within = true;
    bool monotone = true;
};

/// Affine-field Euler scheme: Phi^sigma vs Phi^pi, with pi refined dyadically
/// across levels (so mu(pi) -> 0) and sigma a fixed two-level refinement of
/// pi. Both the gap and its A mu omega budget shrink with the level.
inline ConsistencyLevels consistency_affine_experiment(unsigned levels = 5) {
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder(1.2);
    AlmostFlow phi = euler_young_flow(linear_scalar_field(1.0), unit_time_driver(), 1.0);
    double R = std::exp(1.0);  // working-ball radius of the e^t trajectory
    phi.env.delta = DeltaFunction{[R](double h) { return R * h; }};
    phi.env.M = R / 4.0;

    ConsistencyLevels out;
    for (unsigned k = 1; k <= levels; ++k) {
        Partition pi = Partition::uniform(1.0, std::size_t{4} << k);
        Partition sigma = refine_dyadic(pi, 2);
        SchemePath y = run_scheme(phi, sigma, Vec{1.0});
        DSolutionReport cert = certify_d_solution(phi, y, omega, varpi, phi.env);
        out.K_used = std::max(out.K_used, cert.K_hat);
        ConsistencyReport rep = consistency_gap(phi, y, pi, omega, varpi, phi.env, cert.K_hat);
        out.A_bound = std::max(out.A_bound, rep.A_bound);
        out.gaps.push_back(rep.gap);
        out.worst_budgets.push_back(rep.worst_budget);
        if (!rep.within_budget) out.all_within = false;
    }
    for (std::size_t i = 1; i < out.gaps.size(); ++i)
        if (out.gaps[i] >= out.gaps[i - 1]) out.monotone = false;
    return out;
}

// -- quantization stability --

struct PerturbLevels {
    unsigned bits = 20;
    std::vector<std::size_t> steps;
    std::vector<double> eps_norms;  // sup |eps| / varpi(omega) along the run
    std::vector<double> dists;      // |y - z|_inf
    std::vector<double> ratios;     // dists / eps_norms
    double variation = 0.0;         // max ratio / min ratio
};

/// Perturbed scheme z with phi rounded to the 2^-bits grid; the ratio
/// |y-z| / |eps|_E should stay within a mesh-independent band.
inline PerturbLevels quantization_stability_experiment(unsigned bits = 20, unsigned lo = 4,
                                                       unsigned nlevels = 5) {
    Remainder varpi = power_remainder(1.2);
    Tensor3 A(1, 1, 1);
    Mat b(1, 1);
    b(0, 0) = 1.0 / 3.0;
    AlmostFlow phi = euler_young_flow(affine_field(A, b), unit_time_driver(), 1.0);
    Perturbation eps = quantization_perturbation(phi, bits);

    PerturbLevels out;
    out.bits = bits;
    for (unsigned l = lo; l < lo + nlevels; ++l) {
        std::size_t n = std::size_t{1} << l;
        Partition pi = Partition::uniform(1.0, n);
        SchemePath y = run_scheme(phi, pi, Vec{0.5});
        SchemePath z = perturbed_scheme(phi, eps, pi, Vec{0.5});
        double h = 1.0 / double(n);
        double eta = 0, dist = 0;
        for (std::size_t k = 0; k + 1 < pi.points.size(); ++k) {
            eta = std::max(eta,
                           norm2(eps(pi.points[k], pi.points[k + 1], z.values[k])) / varpi(h));
            dist = std::max(dist, norm2(y.values[k + 1] - z.values[k + 1]));
        }
        out.steps.push_back(n);
        out.eps_norms.push_back(eta);
        out.dists.push_back(dist);
        out.ratios.push_back(eta > 0 ? dist / eta : 0.0);
    }
    double rmin = out.ratios[0], rmax = out.ratios[0];
    for (double r : out.ratios) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    out.variation = rmin > 0 ? rmax / rmin : 0.0;
    return out;
}

// -- mollification ladder --

struct MollifyLadder {
    std::vector<double> hs;
    std::vector<double> dA;
    std::vector<double> sup_dists;
    SchemeDistanceFit fit;  // sup_dist ~ C dA
    bool decreasing = true;
};

/// d_A and scheme distance between the Davie flow of a C^{1+gamma} field
/// and the Davie flows of its Gaussian mollifications, h = 2^-1 .. 2^-6.
inline MollifyLadder mollify_ladder_experiment(double gamma = 0.5, unsigned h_lo = 1,
                                               unsigned h_hi = 6, std::uint64_t seed = 42) {
    VectorField f = rough_field(gamma, 0.5);
    Partition grid = Partition::uniform(1.0, 256);
    GridRoughPath x = sample_ito_ebm(1, grid, 0, seed);
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder((2.0 + gamma) / 2.0);
    AlmostFlow phi = davie_flow(f, x);
    Vec a{0.4};
    SchemePath y = run_scheme(phi, grid, a);
    auto samples = sample_simplex(grid, 1.2, 1, 400, seed ^ 0x77);

    MollifyLadder out;
    for (unsigned k = h_lo; k <= h_hi; ++k) {
        double h = std::pow(2.0, -double(k));
        AlmostFlow ph = davie_flow(mollify(f, h), x);
        FlowDistance d = d_A(phi, ph, omega, varpi, samples);
        SchemePath yh = run_scheme(ph, grid, a);
        double sup = 0;
        for (std::size_t q = 0; q < y.values.size(); ++q)
            sup = std::max(sup, norm2(y.values[q] - yh.values[q]));
        out.hs.push_back(h);
        out.dA.push_back(d.value());
        out.sup_dists.push_back(sup);
    }
    for (std::size_t i = 1; i < out.dA.size(); ++i)
        if (out.dA[i] >= out.dA[i - 1]) out.decreasing = false;
    out.fit = fit_scheme_distance(out.dA, std::vector<double>(out.dA.size(), 0.0), out.sup_dists);
    return out;
}

// -- stability across shrinking horizons --

struct HorizonStability {
    std::vector<double> horizons;
    std::vector<double> ell_hat;
    std::vector<double> ell_formula;
    bool shrinking = true;  // ell_T decreases as T decreases
};

inline HorizonStability stability_horizon_experiment(unsigned kmax = 4) {
    HorizonStability out;
    for (unsigned k = 0; k <= kmax; ++k) {
        double T = std::pow(2.0, -double(k));
        Control omega = linear_control(T);
        Remainder varpi = power_remainder(1.2);
        AlmostFlow phi = euler_young_flow(linear_scalar_field(0.5), unit_time_driver(), 1.0);
        phi.env.delta = DeltaFunction{[](double h) { return 0.6 * h; }};
        Partition pi = Partition::uniform(T, 32);
        std::vector<SchemePath> paths;
        for (double a0 : {1.0, 1.1, 0.9, 1.05})
            paths.push_back(run_scheme(phi, pi, Vec{a0}));
        // linear flow: second differences in a vanish, phi_star(K) = 0
        StabilityReport rep = lipschitz_phi_pi(phi, pi, paths, omega, varpi, 0.0);
        out.horizons.push_back(T);
        out.ell_hat.push_back(rep.ell_hat);
        out.ell_formula.push_back(rep.ell_T_formula);
    }
    for (std::size_t i = 1; i < out.ell_formula.size(); ++i)
        if (out.ell_formula[i] >= out.ell_formula[i - 1]) out.shrinking = false;
    return out;
}

// -- randomized scheme generator (shared by the property suites) --

struct RandomRun {
    AlmostFlow phi;
    SchemePath path;
    GridRoughPath driver;  // empty grid when the flow is driver-function based
    bool has_rough_driver = false;
};

/// One randomized (field, driver, mesh, flow) configuration, seeded.
inline RandomRun random_scheme_run(std::uint64_t seed) {
    KeyStream ks(seed);
    std::size_t n = 8 + static_cast<std::size_t>(ks.uniform() * 57.0);  // 8..64 steps
    Partition pi = Partition::uniform(1.0, n);
    RandomRun run;
    int field_pick = static_cast<int>(ks.uniform() * 4.0);
    int flow_pick = static_cast<int>(ks.uniform() * 2.0);
    Vec a;
    VectorField f;
    switch (field_pick) {
        case 0: f = linear_scalar_field(ks.uniform(-0.5, 0.5)); break;
        case 1: f = sin_field(ks.uniform(0.1, 1.0)); break;
        case 2: f = rotation_field(ks.uniform(0.1, 0.8)); break;
        default: {
            Mat c(1, 1);
            c(0, 0) = ks.uniform(-1.0, 1.0);
            f = constant_field(c);
            break;
        }
    }
    a.resize(f.m);
    for (auto& v : a) v = ks.uniform(-1.5, 1.5);
    if (flow_pick == 0) {
        run.driver = sample_ito_ebm(f.d, pi, 0, ks.bits());
        run.has_rough_driver = true;
        run.phi = davie_flow(f, run.driver);
    } else {
        double amp = ks.uniform(0.2, 1.0);
        auto drv = [amp](double t) { return Vec{amp * std::sin(t) + 0.3 * t}; };
        if (f.d != 1) {
            f = sin_field(0.5);
            a = Vec{ks.uniform(-1.0, 1.0)};
        }
        run.phi = euler_young_flow(f, drv, 1.0);
    }
    run.path = run_scheme(run.phi, pi, a);
    return run;
}

}  // namespace sewing
