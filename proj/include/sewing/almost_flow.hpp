#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sewing/control.hpp"
#include "sewing/linalg.hpp"
#include "sewing/rng.hpp"
#include "sewing/rough_path.hpp"
#include "sewing/vector_field.hpp"

namespace sewing {

/// Certified envelope of an almost flow: ||phi_{t,s} - id|| <= delta(t-s)
/// and defect bounded by M varpi(omega).
struct Envelope {
    DeltaFunction delta;
    double M = 0.0;
};

struct AlmostFlow {
    std::function<Vec(double, double, const Vec&)> eval;  // (s, t, a) -> phi_{t,s}(a)
    Envelope env;
    std::size_t dim = 1;
    std::string tag = "custom";

    Vec operator()(double s, double t, const Vec& a) const { return eval(s, t, a); }
    /// phi_hat = phi - id.
    Vec hat(double s, double t, const Vec& a) const { return eval(s, t, a) - a; }
    /// Defect dphi_{t,s,r}(a) = phi_{t,s}(phi_{s,r}(a)) - phi_{t,r}(a).
    Vec dphi(double r, double s, double t, const Vec& a) const {
        return eval(s, t, eval(r, s, a)) - eval(r, t, a);
    }
};

namespace detail {

inline std::size_t nearest_index(const Partition& grid, double t) {
    auto it = std::lower_bound(grid.points.begin(), grid.points.end(), t);
    if (it == grid.points.end()) return grid.points.size() - 1;
    if (it == grid.points.begin()) return 0;
    std::size_t hi = static_cast<std::size_t>(it - grid.points.begin());
    return (*it - t < t - grid.points[hi - 1]) ? hi : hi - 1;
}

}  // namespace detail

/// Davie approximation phi_{t,s}(a) = a + f(a) x1_{s,t} + f2(a) x2_{s,t}.
/// Times are snapped to the driver's grid nodes.
inline AlmostFlow davie_flow(const VectorField& f, const GridRoughPath& x, Envelope env = {}) {
    if (!f.has_deriv()) throw std::invalid_argument("davie_flow: field needs a derivative");
    if (x.p < 2.0 || x.p >= 3.0) throw std::invalid_argument("davie_flow: p must be in [2,3)");
    if (f.d != x.dim) throw std::invalid_argument("davie_flow: field/driver dimension mismatch");
    AlmostFlow phi;
    phi.dim = f.m;
    phi.tag = "davie";
    if (!env.delta.eval) env.delta = DeltaFunction{[](double) { return 0.0; }};
    phi.env = env;
    phi.eval = [f, x](double s, double t, const Vec& a) {
        std::size_t i = detail::nearest_index(x.grid, s);
        std::size_t j = detail::nearest_index(x.grid, t);
        if (i == j) return a;
        RoughIncrement inc = x.over(std::min(i, j), std::max(i, j));
        Vec out = a + matvec(f.eval(a), inc.x1);
        out += contract(f2(f, a), inc.x2);
        return out;
    };
    return phi;
}

/// Euler/Young flow phi_{t,s}(a) = a + f(a)(x_t - x_s) for a level-1
/// driver. Requires the regularity budget alpha (1 + gamma) > 1.
inline AlmostFlow euler_young_flow(const VectorField& f, std::function<Vec(double)> driver,
                                   double alpha, Envelope env = {}) {
    if (alpha * (1.0 + f.gamma) <= 1.0)
        throw std::invalid_argument("euler_young_flow: alpha(1+gamma) <= 1, Young budget violated");
    AlmostFlow phi;
    phi.dim = f.m;
    phi.tag = "euler";
    if (!env.delta.eval) env.delta = DeltaFunction{[](double) { return 0.0; }};
    phi.env = env;
    phi.eval = [f, driver](double s, double t, const Vec& a) {
        Vec inc = driver(t) - driver(s);
        return a + matvec(f.eval(a), inc);
    };
    return phi;
}

inline AlmostFlow identity_flow(std::size_t dim) {
    AlmostFlow phi;
    phi.dim = dim;
    phi.tag = "identity";
    phi.env.delta = DeltaFunction{[](double) { return 0.0; }};
    phi.eval = [](double, double, const Vec& a) { return a; };
    return phi;
}

// -- samplers --

struct SimplexSample {
    double r, s, t;
    Vec a;
};

/// Seeded samples of (r,s,t,a): grid-node triples with a in the working
/// ball |a| <= R.
inline std::vector<SimplexSample> sample_simplex(const Partition& grid, double R, std::size_t dim,
                                                 std::size_t n, std::uint64_t seed) {
    KeyStream ks(seed);
    std::vector<SimplexSample> out;
    out.reserve(n);
    std::size_t npts = grid.points.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::array<std::size_t, 3> idx = {static_cast<std::size_t>(ks.uniform() * npts),
                                          static_cast<std::size_t>(ks.uniform() * npts),
                                          static_cast<std::size_t>(ks.uniform() * npts)};
        for (auto& i : idx) i = std::min(i, npts - 1);
        std::sort(idx.begin(), idx.end());
        Vec a(dim);
        for (auto& v : a) v = ks.uniform(-R, R);
        out.push_back({grid.points[idx[0]], grid.points[idx[1]], grid.points[idx[2]], std::move(a)});
    }
    return out;
}

// -- defect / class-O measurement --

struct DefectReport {
    double M_hat = 0.0;
    SimplexSample worst_triple;
    double osc_constant = 0.0;
    bool degenerate = false;  // varpi(omega)=0 with nonzero defect
    std::size_t samples = 0;
};

inline DefectReport defect(const AlmostFlow& phi, const Control& omega, const Remainder& varpi,
                           const std::vector<SimplexSample>& samples) {
    DefectReport rep;
    double delta_T = phi.env.delta.eval ? phi.env.delta(omega.horizon) : 0.0;
    const std::array<double, 3> osc_levels = {0.5, 1.0, 4.0};
    KeyStream ks(0x05cA11ED);
    for (const auto& smp : samples) {
        double w = varpi(omega(smp.r, smp.t));
        double dnorm = norm2(phi.dphi(smp.r, smp.s, smp.t, smp.a));
        if (w <= 0) {
            if (dnorm > 1e-12) rep.degenerate = true;
        } else if (dnorm / w > rep.M_hat) {
            rep.M_hat = dnorm / w;
            rep.worst_triple = smp;
        }
        // class-O probe: pairs at distance L varpi(omega_{r,s})
        if (delta_T > 0 && w > 0) {
            for (double L : osc_levels) {
                double radius = L * varpi(omega(smp.r, smp.s));
                if (radius <= 0) continue;
                Vec b = smp.a;
                for (auto& v : b) v += radius / std::sqrt(double(b.size())) * (ks.uniform() < 0.5 ? -1.0 : 1.0);
                double osc = norm2(phi.hat(smp.s, smp.t, smp.a) - phi.hat(smp.s, smp.t, b));
                rep.osc_constant = std::max(rep.osc_constant, osc / (delta_T * (1.0 + L) * w));
            }
        }
        ++rep.samples;
    }
    return rep;
}

// -- distance on almost flows --

struct FlowDistance {
    double d_inf = 0.0;       // sup |phi - psi|
    double osc_norm = 0.0;    // class-O seminorm of phi - psi
    double defect_div = 0.0;  // sup |dphi - dpsi| / varpi(omega)
    std::size_t samples = 0;

    double value() const { return std::max({d_inf, osc_norm, defect_div}); }
};

inline FlowDistance d_A(const AlmostFlow& phi, const AlmostFlow& psi, const Control& omega,
                        const Remainder& varpi, const std::vector<SimplexSample>& samples) {
    if (phi.dim != psi.dim) throw std::invalid_argument("d_A: flows on different spaces");
    FlowDistance rep;
    double delta_T = phi.env.delta.eval ? phi.env.delta(omega.horizon) : 0.0;
    if (delta_T <= 0) delta_T = 1.0;  // seminorm normalization fallback
    const std::array<double, 3> osc_levels = {0.5, 1.0, 4.0};
    KeyStream ks(0xd15EA5E);
    auto chi = [&](double s, double t, const Vec& a) {
        return phi(s, t, a) - psi(s, t, a);
    };
    for (const auto& smp : samples) {
        rep.d_inf = std::max(rep.d_inf, norm2(chi(smp.s, smp.t, smp.a)));
        rep.d_inf = std::max(rep.d_inf, norm2(chi(smp.r, smp.t, smp.a)));
        double w = varpi(omega(smp.r, smp.t));
        if (w > 0) {
            double dd = norm2(phi.dphi(smp.r, smp.s, smp.t, smp.a) -
                              psi.dphi(smp.r, smp.s, smp.t, smp.a));
            rep.defect_div = std::max(rep.defect_div, dd / w);
            for (double L : osc_levels) {
                double radius = L * varpi(omega(smp.r, smp.s));
                if (radius <= 0) continue;
                Vec b = smp.a;
                for (auto& v : b) v += radius / std::sqrt(double(b.size())) * (ks.uniform() < 0.5 ? -1.0 : 1.0);
                double osc = norm2(chi(smp.s, smp.t, smp.a) - chi(smp.s, smp.t, b));
                rep.osc_norm = std::max(rep.osc_norm, osc / (delta_T * (1.0 + L) * w));
            }
        }
        ++rep.samples;
    }
    return rep;
}

// -- 4-point control --

struct FourPointReport {
    std::vector<double> alpha_grid;
    std::vector<double> phi_star;  // fitted phi^* per alpha
    double lip_excess = 0.0;       // sampled Lipschitz constant of phi_{t,s}
    std::size_t samples = 0;
};

/// Fits the smallest (phi_star, lip_excess) dominating sampled quadruples
/// in the second-difference inequality. Parallelogram quadruples
/// (b = a+u, d = c+u) isolate the phi_star term; the Lipschitz factor is
/// sampled separately on pairs.
inline FourPointReport four_point(const AlmostFlow& phi, const Control& omega,
                                  const Remainder& varpi,
                                  const std::vector<SimplexSample>& samples,
                                  std::vector<double> alpha_grid = {0.25, 0.5, 1.0, 2.0, 4.0}) {
    FourPointReport rep;
    rep.alpha_grid = alpha_grid;
    rep.phi_star.assign(alpha_grid.size(), 0.0);
    KeyStream ks(0x4b01b7);
    for (const auto& smp : samples) {
        double wrs = varpi(omega(smp.r, smp.s));
        double wrt = varpi(omega(smp.r, smp.t));
        // Lipschitz excess on pairs
        Vec c = smp.a;
        for (auto& v : c) v += ks.uniform(-0.5, 0.5);
        double dist = norm2(smp.a - c);
        if (dist > 0) {
            double q = norm2(phi(smp.s, smp.t, smp.a) - phi(smp.s, smp.t, c)) / dist;
            rep.lip_excess = std::max(rep.lip_excess, q);
        }
        if (wrs <= 0 || wrt <= 0) continue;
        for (std::size_t ai = 0; ai < alpha_grid.size(); ++ai) {
            double ulen = alpha_grid[ai] * wrs;
            Vec u(smp.a.size()), v(smp.a.size());
            for (auto& q : u) q = ks.uniform(-1, 1);
            for (auto& q : v) q = ks.uniform(-1, 1);
            double un = norm2(u), vn = norm2(v);
            if (un <= 0 || vn <= 0) continue;
            for (auto& q : u) q *= ulen / un;
            double vlen = 0.3;
            for (auto& q : v) q *= vlen / vn;
            Vec a = smp.a, b = smp.a + u, cc = smp.a + v, d = smp.a + v + u;
            Vec second = phi(smp.s, smp.t, a) - phi(smp.s, smp.t, b) - phi(smp.s, smp.t, cc) +
                         phi(smp.s, smp.t, d);
            // parallelogram: a-b-c+d = 0, the (1+delta_T) term vanishes
            rep.phi_star[ai] = std::max(rep.phi_star[ai], norm2(second) / (vlen * wrt));
        }
        ++rep.samples;
    }
    return rep;
}

// -- perturbations --

struct Perturbation {
    std::function<Vec(double, double, const Vec&)> eval;
    double eta = 0.0;  // certified ||eps||_E bound

    Vec operator()(double s, double t, const Vec& a) const { return eval(s, t, a); }
};

/// eps_{t,s}(a) = eta varpi(omega_{s,t}) u for a fixed unit direction u.
inline Perturbation uniform_perturbation(double eta, const Control& omega, const Remainder& varpi,
                                         Vec direction) {
    double n = norm2(direction);
    for (auto& v : direction) v /= n;
    return Perturbation{[eta, omega, varpi, direction](double s, double t, const Vec&) {
                            return eta * varpi(omega(s, t)) * direction;
                        },
                        eta};
}

/// Round-off model: eps = quantization of phi to a 2^-bits grid.
/// eta must be estimated by sampling (see estimate_eta).
inline Perturbation quantization_perturbation(const AlmostFlow& phi, unsigned bits) {
    double q = std::pow(2.0, -double(bits));
    return Perturbation{[phi, q](double s, double t, const Vec& a) {
                            Vec v = phi(s, t, a);
                            Vec e(v.size());
                            for (std::size_t i = 0; i < v.size(); ++i)
                                e[i] = q * std::round(v[i] / q) - v[i];
                            return e;
                        },
                        0.0};
}

/// Sampled sup of |eps|/varpi(omega) over consecutive-style pairs.
inline double estimate_eta(const Perturbation& eps, const Control& omega, const Remainder& varpi,
                           const std::vector<SimplexSample>& samples) {
    double eta = 0;
    for (const auto& smp : samples) {
        double w = varpi(omega(smp.s, smp.t));
        if (w <= 0) continue;
        eta = std::max(eta, norm2(eps(smp.s, smp.t, smp.a)) / w);
    }
    return eta;
}

/// phi + eps with the envelope rule (delta(1+eta), M + (2+delta_T) eta).
inline AlmostFlow perturb(const AlmostFlow& phi, const Perturbation& eps, double horizon) {
    AlmostFlow psi;
    psi.dim = phi.dim;
    psi.tag = "perturbed";
    double eta = eps.eta;
    double delta_T = phi.env.delta.eval ? phi.env.delta(horizon) : 0.0;
    auto base_delta = phi.env.delta;
    psi.env.delta = DeltaFunction{[base_delta, eta](double h) {
        return (base_delta.eval ? base_delta(h) : 0.0) * (1.0 + eta);
    }};
    psi.env.M = phi.env.M + (2.0 + delta_T) * eta;
    psi.eval = [phi, eps](double s, double t, const Vec& a) {
        return phi(s, t, a) + eps(s, t, a);
    };
    return psi;
}

}  // namespace sewing
