#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sewing/almost_flow.hpp"
#include "sewing/rough_path.hpp"
#include "sewing/sewing_engine.hpp"
#include "sewing/stats.hpp"
#include "sewing/vector_field.hpp"

namespace sewing {

/// Numerical scheme of the Davie approximation over an enhanced Brownian
/// driver: the Milstein scheme. The driver is coarsened onto pi when it
/// was sampled on a finer grid.
inline SchemePath milstein_run(const VectorField& sigma, const GridRoughPath& ebm,
                               const Partition& pi, const Vec& a, double region = 0.0) {
    const GridRoughPath* drv = &ebm;
    GridRoughPath coarse;
    if (ebm.grid.points.size() != pi.points.size()) {
        coarse = coarsen(ebm, pi);
        drv = &coarse;
    }
    AlmostFlow phi = davie_flow(sigma, *drv);
    phi.tag = "milstein";
    return run_scheme(phi, pi, a, region);
}

// -- Psi-remainder moment checks --

struct PsiMomentRow {
    double dt = 0.0;        // |t - s|
    double moment = 0.0;    // (E |Psi|^k)^{1/k}
    double stderr_ = 0.0;   // Monte Carlo standard error of the k-th moment
};

struct PsiMomentReport {
    std::vector<PsiMomentRow> rows;
    double fitted_exponent = 0.0;
    double target_exponent = 0.0;  // (2 + gamma) / 2
    unsigned k = 2;
    bool low_budget = false;
};

/// Monte Carlo estimate of (E|Psi_{0,dt}(a)|^k)^{1/k} against |dt|, with
/// Psi = X_dt - a - sigma(a) B - Dsigma.sigma(a) B2 and X a fine-grid
/// Milstein reference on ref_steps sub-steps.
inline PsiMomentReport psi_moment_check(const VectorField& sigma, const Vec& a, unsigned k,
                                        const std::vector<double>& dts, std::size_t n_mc,
                                        std::uint64_t seed, std::size_t ref_steps = 256) {
    if (!sigma.has_deriv()) throw std::invalid_argument("psi_moment_check: needs derivative");
    PsiMomentReport rep;
    rep.k = k;
    rep.target_exponent = (2.0 + sigma.gamma) / 2.0;
    Mat sa = sigma.eval(a);
    Tensor3 f2a = f2(sigma, a);
    for (double dt : dts) {
        Partition fine = Partition::uniform(dt, ref_steps);
        std::vector<double> powk;
        powk.reserve(n_mc);
        for (std::size_t mc = 0; mc < n_mc; ++mc) {
            GridRoughPath ebm = sample_ito_ebm(sigma.d, fine, 0, hash_key(seed, mc, 7701));
            SchemePath x = milstein_run(sigma, ebm, fine, a);
            RoughIncrement full = ebm.over(0, ebm.increments.size());
            Vec psi = x.values.back() - a - matvec(sa, full.x1) - contract(f2a, full.x2);
            powk.push_back(std::pow(norm2(psi), double(k)));
        }
        PsiMomentRow row;
        row.dt = dt;
        double m = mean(powk);
        row.moment = std::pow(m, 1.0 / double(k));
        row.stderr_ = stddev(powk) / std::sqrt(double(n_mc));
        if (m > 0 && row.stderr_ > 0.5 * m) rep.low_budget = true;
        rep.rows.push_back(row);
    }
    std::vector<double> xs, ys;
    for (const auto& r : rep.rows)
        if (r.moment > 1e-13) {  // below this the remainder is pure rounding noise
            xs.push_back(r.dt);
            ys.push_back(r.moment);
        }
    if (xs.size() >= 2) rep.fitted_exponent = loglog_fit(xs, ys).slope;
    return rep;
}

// -- pathwise convergence-rate regression --

enum class RateReference {
    ClosedFormGbm,   // X_t = a exp(B_t - t/2), scalar sigma(a) = a
    SelfConsistent,  // same-driver scheme on the reference (finest) grid
};

struct RateReport {
    std::vector<double> meshes;
    std::vector<std::vector<double>> errors;  // [path][level] sup-norm error
    std::vector<double> slopes;               // per-path log-log slope
    double median_slope = 0.0;
    double theta_target = 0.0;
    std::size_t excluded = 0;   // non-monotone error paths left out of the median
    std::size_t degenerate = 0; // machine-epsilon error paths (slope undefined)
};

/// Per-path pathwise rates on dyadic levels with coupled Brownian draws:
/// one fine enhanced path per (seed, path), coarsened to every level, so
/// the regression measures discretization error only.
inline RateReport rate_regression(const VectorField& sigma, const Vec& a,
                                  const std::vector<unsigned>& levels, std::size_t n_paths,
                                  std::uint64_t seed, RateReference ref_kind,
                                  double theta_target, double T = 1.0,
                                  unsigned ref_extra_levels = 2) {
    if (levels.size() < 2) throw std::invalid_argument("rate_regression: need >= 2 levels");
    unsigned lmax = 0;
    for (unsigned l : levels) lmax = std::max(lmax, l);
    unsigned lref = lmax + ref_extra_levels;
    RateReport rep;
    rep.theta_target = theta_target;
    for (unsigned l : levels) rep.meshes.push_back(T / double(std::size_t{1} << l));

    Partition fine = Partition::uniform(T, std::size_t{1} << lref);
    for (std::size_t p = 0; p < n_paths; ++p) {
        GridRoughPath ebm = sample_ito_ebm(sigma.d, fine, 0, hash_key(seed, p, 4242));
        // reference values on the fine grid
        std::vector<Vec> ref;
        if (ref_kind == RateReference::ClosedFormGbm) {
            if (sigma.d != 1 || sigma.m != 1)
                throw std::invalid_argument("closed-form reference is scalar only");
            ref.reserve(fine.points.size());
            double b = 0;
            ref.push_back(a);
            for (std::size_t i = 0; i < ebm.increments.size(); ++i) {
                b += ebm.increments[i].x1[0];
                ref.push_back({a[0] * std::exp(b - 0.5 * fine.points[i + 1])});
            }
        } else {
            ref = milstein_run(sigma, ebm, fine, a).values;
        }
        std::vector<double> errs;
        for (unsigned l : levels) {
            std::size_t n = std::size_t{1} << l;
            Partition pi = Partition::uniform(T, n);
            SchemePath y = milstein_run(sigma, ebm, pi, a);
            std::size_t stride = std::size_t{1} << (lref - l);
            double e = 0;
            for (std::size_t kk = 0; kk <= n; ++kk)
                e = std::max(e, norm2(y.values[kk] - ref[kk * stride]));
            errs.push_back(e);
        }
        rep.errors.push_back(errs);
        bool degenerate = true;
        for (double e : errs)
            if (e > 1e-12) degenerate = false;
        if (degenerate) {
            ++rep.degenerate;
            continue;
        }
        bool monotone = true;
        for (std::size_t i = 1; i < errs.size(); ++i)
            if (errs[i] > errs[i - 1] * 1.5) monotone = false;  // allow pathwise wiggle
        if (!monotone) {
            ++rep.excluded;
            continue;
        }
        rep.slopes.push_back(loglog_fit(rep.meshes, errs).slope);
    }
    if (!rep.slopes.empty()) rep.median_slope = median(rep.slopes);
    return rep;
}

}  // namespace sewing
