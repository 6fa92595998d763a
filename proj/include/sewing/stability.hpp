#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sewing/almost_flow.hpp"
#include "sewing/control.hpp"
#include "sewing/sewing_engine.hpp"
#include "sewing/stats.hpp"

namespace sewing {

struct StabilityReport {
    double ell_hat = 0.0;        // empirical sup of |Phi^pi(y)-Phi^pi(z)| / |y-z|_inf
    double ell_T_formula = 0.0;  // delta_T + (|dphi|_{Lip/varpi} + (1+dT)(2+dT) + phi*(K)) varpi(w_0T)/(1-kappa)
    bool contraction = false;
    std::size_t pairs = 0;
};

/// Sampled sup over triples of Lip(dphi_{t,s,r}) / varpi(omega_{r,t}).
inline double dphi_lip_div_varpi(const AlmostFlow& phi, const Control& omega,
                                 const Remainder& varpi,
                                 const std::vector<SimplexSample>& samples) {
    double sup = 0;
    KeyStream ks(0xd1b);
    for (const auto& smp : samples) {
        double w = varpi(omega(smp.r, smp.t));
        if (w <= 0) continue;
        Vec b = smp.a;
        for (auto& v : b) v += ks.uniform(-0.25, 0.25);
        double dist = norm2(smp.a - b);
        if (dist <= 0) continue;
        double lip = norm2(phi.dphi(smp.r, smp.s, smp.t, smp.a) -
                           phi.dphi(smp.r, smp.s, smp.t, b)) / dist;
        sup = std::max(sup, lip / w);
    }
    return sup;
}

/// Empirical Lipschitz constant of Phi^pi over the supplied D-solution
/// path pairs, against the stable-almost-flow formula for ell_T.
inline StabilityReport lipschitz_phi_pi(const AlmostFlow& phi, const Partition& pi,
                                        const std::vector<SchemePath>& paths,
                                        const Control& omega, const Remainder& varpi,
                                        double phi_star_K) {
    StabilityReport rep;
    double delta_T = phi.env.delta(omega.horizon);
    double dlip = 0.0;
    {
        auto samples = sample_simplex(pi, 1.0, phi.dim, 400, 0x11f);
        dlip = dphi_lip_div_varpi(phi, omega, varpi, samples);
    }
    rep.ell_T_formula =
        delta_T + (dlip + (1.0 + delta_T) * (2.0 + delta_T) + phi_star_K) /
                      (1.0 - varpi.kappa) * varpi(omega(0.0, omega.horizon));
    for (std::size_t p = 0; p < paths.size(); ++p)
        for (std::size_t q = p + 1; q < paths.size(); ++q) {
            const auto& y = paths[p].values;
            const auto& z = paths[q].values;
            double dist = 0;
            for (std::size_t k = 0; k < y.size(); ++k) dist = std::max(dist, norm2(y[k] - z[k]));
            if (dist <= 0) continue;
            double worst = 0;
            std::size_t n = pi.points.size();
            for (std::size_t i = 0; i + 1 < n; ++i) {
                // accumulate Phi differences over (i, j) incrementally
                Vec acc(phi.dim, 0.0);
                for (std::size_t j = i + 1; j < n; ++j) {
                    acc += phi.hat(pi.points[j - 1], pi.points[j], y[j - 1]) -
                           phi.hat(pi.points[j - 1], pi.points[j], z[j - 1]);
                    worst = std::max(worst, norm2(acc));
                }
            }
            rep.ell_hat = std::max(rep.ell_hat, worst / dist);
            ++rep.pairs;
        }
    rep.contraction = rep.ell_hat < 1.0;
    return rep;
}

// -- scheme-vs-scheme distance --

struct SchemeDistanceReport {
    double lhs = 0.0;       // max |y_j - phi_{j,i}(y_i) - z_j + psi_{j,i}(z_i)| / varpi(omega)
    double sup_dist = 0.0;  // |y^pi - z^pi|_inf
    double a_dist = 0.0;    // |a - b|
};

inline SchemeDistanceReport scheme_distance(const AlmostFlow& phi, const AlmostFlow& psi,
                                            const SchemePath& y, const SchemePath& z,
                                            const Control& omega, const Remainder& varpi) {
    SchemeDistanceReport rep;
    const auto& pts = y.partition.points;
    rep.a_dist = norm2(y.origin - z.origin);
    for (std::size_t k = 0; k < pts.size(); ++k)
        rep.sup_dist = std::max(rep.sup_dist, norm2(y.values[k] - z.values[k]));
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double w = varpi(omega(pts[i], pts[j]));
            if (w <= 0) continue;
            Vec v = y.values[j] - phi(pts[i], pts[j], y.values[i]) - z.values[j] +
                    psi(pts[i], pts[j], z.values[i]);
            rep.lhs = std::max(rep.lhs, norm2(v) / w);
        }
    return rep;
}

struct SchemeDistanceFit {
    double C = 0.0;       // coefficient on d_A(phi, psi)
    double C_prime = 0.0; // coefficient on |a - b|
    double r2 = 0.0;
};

/// Least-squares fit sup_dist ~ C d_A + C' |a-b| (no intercept) over an
/// experiment batch.
inline SchemeDistanceFit fit_scheme_distance(const std::vector<double>& dA,
                                             const std::vector<double>& ab,
                                             const std::vector<double>& sup_dist) {
    if (dA.size() != ab.size() || dA.size() != sup_dist.size() || dA.size() < 2)
        throw std::invalid_argument("fit_scheme_distance: batch size mismatch");
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (std::size_t i = 0; i < dA.size(); ++i) {
        s11 += dA[i] * dA[i];
        s12 += dA[i] * ab[i];
        s22 += ab[i] * ab[i];
        b1 += dA[i] * sup_dist[i];
        b2 += ab[i] * sup_dist[i];
    }
    SchemeDistanceFit fit;
    double det = s11 * s22 - s12 * s12;
    if (std::abs(det) > 1e-300) {
        fit.C = (b1 * s22 - b2 * s12) / det;
        fit.C_prime = (b2 * s11 - b1 * s12) / det;
    } else if (s11 > 0) {
        fit.C = b1 / s11;  // degenerate batch: one regressor only
    } else if (s22 > 0) {
        fit.C_prime = b2 / s22;
    }
    double ss_tot = 0, ss_res = 0, m = 0;
    for (double v : sup_dist) m += v;
    m /= static_cast<double>(sup_dist.size());
    for (std::size_t i = 0; i < dA.size(); ++i) {
        double pred = fit.C * dA[i] + fit.C_prime * ab[i];
        ss_res += (sup_dist[i] - pred) * (sup_dist[i] - pred);
        ss_tot += (sup_dist[i] - m) * (sup_dist[i] - m);
    }
    fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

// -- Lambda-norm boundedness --

struct LambdaReport {
    double lambda_norm = 0.0;
    double bound_cont3 = 0.0;  // sup-norm bound
    double bound_cont4 = 0.0;  // Lambda-norm bound
    bool certified = false;    // C_Lambda Lambda(omega_{0,T}) <= 1/2
    bool flagged = false;      // Lambda(omega)=0 against motion
};

inline LambdaReport lambda_norm(const SchemePath& y, const std::function<double(double)>& Lambda,
                                const Control& omega, const Remainder& varpi, double K,
                                double C_Lambda, double R0) {
    LambdaReport rep;
    const auto& pts = y.partition.points;
    double sup_y = 0;
    for (const auto& v : y.values) sup_y = std::max(sup_y, norm2(v));
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double lam = Lambda(omega(pts[i], pts[j]));
            double move = norm2(y.values[j] - y.values[i]);
            if (lam <= 0) {
                if (move > 1e-12) rep.flagged = true;
                continue;
            }
            rep.lambda_norm = std::max(rep.lambda_norm, move / lam);
        }
    double w0T = omega(0.0, omega.horizon);
    double lam0T = Lambda(w0T);
    rep.certified = C_Lambda * lam0T <= 0.5;
    rep.bound_cont3 = 2.0 * norm2(y.origin) + 2.0 * K * varpi(w0T) + 2.0 * C_Lambda * R0 * lam0T;
    double theta = lam0T > 0 ? varpi(w0T) / lam0T : 0.0;
    rep.bound_cont4 = C_Lambda * std::max(sup_y, R0) + K * theta;
    return rep;
}

}  // namespace sewing
