#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sewing/almost_flow.hpp"
#include "sewing/control.hpp"
#include "sewing/linalg.hpp"

namespace sewing {

/// Discrete path {y_{t_k}} produced by iterating an almost flow.
struct SchemePath {
    Partition partition;
    std::vector<Vec> values;
    Vec origin;
    std::string flow_tag;
    bool escaped = false;  // left the working region at some step

    const Vec& at(std::size_t k) const { return values[k]; }

    /// Linear interpolation between partition nodes.
    Vec interpolate(double t) const {
        const auto& pts = partition.points;
        if (t <= pts.front()) return values.front();
        if (t >= pts.back()) return values.back();
        std::size_t hi = 1;
        while (pts[hi] < t) ++hi;
        double lam = (t - pts[hi - 1]) / (pts[hi] - pts[hi - 1]);
        Vec out = values[hi - 1];
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += lam * (values[hi][i] - values[hi - 1][i]);
        return out;
    }
};

/// y_0 = a, y_{k+1} = phi_{t_{k+1},t_k}(y_k). Escaping the working ball
/// |y| <= region flags the run but does not abort it.
inline SchemePath run_scheme(const AlmostFlow& phi, const Partition& pi, const Vec& a,
                             double region = 0.0) {
    SchemePath y;
    y.partition = pi;
    y.origin = a;
    y.flow_tag = phi.tag;
    y.values.reserve(pi.points.size());
    y.values.push_back(a);
    for (std::size_t k = 0; k + 1 < pi.points.size(); ++k) {
        Vec next = phi(pi.points[k], pi.points[k + 1], y.values.back());
        if (region > 0 && norm2(next) > region) y.escaped = true;
        y.values.push_back(std::move(next));
    }
    return y;
}

/// z_{k+1} = phi_{k+1,k}(z_k) + eps_{k+1,k}(z_k).
inline SchemePath perturbed_scheme(const AlmostFlow& phi, const Perturbation& eps,
                                   const Partition& pi, const Vec& a, double region = 0.0) {
    SchemePath z;
    z.partition = pi;
    z.origin = a;
    z.flow_tag = phi.tag + "+eps";
    z.values.reserve(pi.points.size());
    z.values.push_back(a);
    for (std::size_t k = 0; k + 1 < pi.points.size(); ++k) {
        double s = pi.points[k], t = pi.points[k + 1];
        Vec next = phi(s, t, z.values.back()) + eps(s, t, z.values.back());
        if (region > 0 && norm2(next) > region) z.escaped = true;
        z.values.push_back(std::move(next));
    }
    return z;
}

/// Phi^pi_{i,j}(y) = sum_{k=i}^{j-1} phi_hat_{k+1,k}(y_k). Chasles
/// additivity is exact (finite sum regrouping).
inline Vec phi_pi(const AlmostFlow& phi, const Partition& pi, const std::vector<Vec>& y,
                  std::size_t i, std::size_t j) {
    if (i > j || j >= pi.points.size()) throw std::invalid_argument("phi_pi: bad index pair");
    Vec acc(phi.dim, 0.0);
    for (std::size_t k = i; k < j; ++k)
        acc += phi.hat(pi.points[k], pi.points[k + 1], y[k]);
    return acc;
}

// -- D-solution certification --

struct DSolutionReport {
    double K_hat = 0.0;  // exact sup over all pairs of |y_j - phi_{j,i}(y_i)| / varpi(omega)
    double L_bound = 0.0;
    bool certifying = false;  // envelope hypotheses held (kappa + 2 delta_T < 1)
    bool pass = false;        // K_hat <= L_bound, on a certifying envelope
    std::size_t pairs = 0;
    bool degenerate = false;  // varpi(omega)=0 against a moving pair
};

inline double davie_L(double delta_T, double M, double kappa) {
    return 2.0 * (delta_T + M) / (1.0 - kappa - 2.0 * delta_T);
}

/// Exhaustive O(n^2)-pair check that the scheme path is a D-solution with
/// the explicit constant L = 2(delta_T + M)/(1 - kappa - 2 delta_T).
inline DSolutionReport certify_d_solution(const AlmostFlow& phi, const SchemePath& y,
                                          const Control& omega, const Remainder& varpi,
                                          const Envelope& env) {
    DSolutionReport rep;
    double delta_T = env.delta(omega.horizon);
    rep.certifying = varpi.kappa + 2.0 * delta_T < 1.0;
    if (rep.certifying) rep.L_bound = davie_L(delta_T, env.M, varpi.kappa);
    const auto& pts = y.partition.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double w = varpi(omega(pts[i], pts[j]));
            double dev = norm2(y.values[j] - phi(pts[i], pts[j], y.values[i]));
            if (w <= 0) {
                if (dev > 1e-12) rep.degenerate = true;
                continue;
            }
            rep.K_hat = std::max(rep.K_hat, dev / w);
            ++rep.pairs;
        }
    rep.pass = rep.certifying && rep.K_hat <= rep.L_bound;
    return rep;
}

// -- consistency --

struct ConsistencyReport {
    double A_bound = 0.0;
    double gap = 0.0;           // max over checked pairs of |Phi^sigma - Phi^pi|
    double worst_budget = 0.0;  // A mu omega at the worst pair
    bool within_budget = true;  // gap <= budget on every checked pair
    std::size_t pairs = 0;
};

inline double consistency_A(double delta_T, double K, double M, double kappa) {
    return 2.0 * (delta_T * (1.0 + K) + M) / (1.0 - kappa);
}

/// Compares Phi^sigma vs Phi^pi over all pi-pairs for a path y living on
/// the refinement sigma. Requires sigma nested (the regrouping argument
/// needs it).
inline ConsistencyReport consistency_gap(const AlmostFlow& phi, const SchemePath& y,
                                         const Partition& pi, const Control& omega,
                                         const Remainder& varpi, const Envelope& env, double K) {
    const Partition& sigma = y.partition;
    if (!pi.nested_in(sigma))
        throw std::invalid_argument("consistency_gap: sigma does not refine pi");
    ConsistencyReport rep;
    double delta_T = env.delta(omega.horizon);
    rep.A_bound = consistency_A(delta_T, K, env.M, varpi.kappa);

    // y restricted to pi's nodes
    std::vector<Vec> y_pi;
    std::vector<std::size_t> sigma_idx;
    for (double t : pi.points) {
        std::size_t k = sigma.index_of(t);
        sigma_idx.push_back(k);
        y_pi.push_back(y.values[k]);
    }
    for (std::size_t i = 0; i + 1 < pi.points.size(); ++i)
        for (std::size_t j = i + 1; j < pi.points.size(); ++j) {
            Vec coarse = phi_pi(phi, pi, y_pi, i, j);
            Vec fine = phi_pi(phi, sigma, y.values, sigma_idx[i], sigma_idx[j]);
            double g = norm2(fine - coarse);
            double budget = rep.A_bound * mu(pi, omega, varpi, pi.points[i], pi.points[j]) *
                            omega(pi.points[i], pi.points[j]);
            if (g > budget + 1e-12) rep.within_budget = false;
            if (g > rep.gap) {
                rep.gap = g;
                rep.worst_budget = budget;
            }
            ++rep.pairs;
        }
    return rep;
}

// -- sewing limit --

struct SewingLimit {
    Vec value;
    double last_gap = 0.0;  // Cauchy gap at the deepest level, the error proxy
    unsigned depth = 0;
    bool diverging = false;  // gaps failed to decrease
};

/// Phi^{pi_k}_{s,t}(y) along dyadic partitions of [s,t]; y is interpolated
/// linearly between its nodes. Returns the deepest value with the last
/// dyadic gap as error estimate.
inline SewingLimit sewing_limit(const AlmostFlow& phi, const SchemePath& y, double s, double t,
                                unsigned k_max) {
    SewingLimit out;
    Vec prev;
    double prev_gap = -1.0;
    for (unsigned k = 0; k <= k_max; ++k) {
        std::size_t n = std::size_t{1} << k;
        Vec acc(phi.dim, 0.0);
        for (std::size_t q = 0; q < n; ++q) {
            double u = s + (t - s) * static_cast<double>(q) / n;
            double v = s + (t - s) * static_cast<double>(q + 1) / n;
            acc += phi.hat(u, v, y.interpolate(u));
        }
        if (k > 0) {
            double gap = norm2(acc - prev);
            if (prev_gap >= 0 && gap > prev_gap && gap > 1e-12) out.diverging = true;
            prev_gap = gap;
            out.last_gap = gap;
        }
        prev = std::move(acc);
        out.depth = k;
    }
    out.value = prev;
    return out;
}

// -- uniqueness residual --

struct UniquenessReport {
    double residual = 0.0;  // |y_T - psi_{T,0}(a)|
    double telescoping_bound = 0.0;
};

/// Telescoping check against a candidate flow psi: residual plus the bound
/// (K + osc_const (1+K) delta_T) sum varpi(omega_{k,k+1}); vanishes with
/// the mesh when psi is a flow of class O.
inline UniquenessReport uniqueness_residual(
    const std::function<Vec(double, double, const Vec&)>& psi, const SchemePath& y,
    const Control& omega, const Remainder& varpi, double K, double osc_const, double delta_T) {
    UniquenessReport rep;
    const auto& pts = y.partition.points;
    double T = pts.back();
    rep.residual = norm2(y.values.back() - psi(0.0, T, y.origin));
    double sum = 0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) sum += varpi(omega(pts[k], pts[k + 1]));
    rep.telescoping_bound = (K + osc_const * (1.0 + K) * delta_T) * sum;
    return rep;
}

}  // namespace sewing
