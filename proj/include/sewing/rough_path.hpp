#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sewing/control.hpp"
#include "sewing/linalg.hpp"
#include "sewing/rng.hpp"

namespace sewing {

/// Level-2 increment (x1, x2) in U + U⊗U.
struct RoughIncrement {
    Vec x1;
    Mat x2;

    static RoughIncrement zero(std::size_t d) { return {Vec(d, 0.0), Mat(d, d)}; }
};

/// (x1_a + x1_b, x2_a + x2_b + x1_a ⊗ x1_b).
inline RoughIncrement chen_combine(const RoughIncrement& a, const RoughIncrement& b) {
    if (a.x1.size() != b.x1.size()) throw std::invalid_argument("chen_combine: dimension mismatch");
    RoughIncrement c;
    c.x1 = a.x1 + b.x1;
    c.x2 = a.x2 + b.x2 + outer(a.x1, b.x1);
    return c;
}

/// Level-2 rough path stored on its base grid only; increments over wider
/// pairs are Chen-composed on demand, so multiplicativity is exact by
/// construction.
struct GridRoughPath {
    Partition grid;
    std::vector<RoughIncrement> increments;  // one per consecutive base pair
    std::size_t dim = 1;
    double p = 2.0;
    mutable std::optional<double> pvar_cache;

    RoughIncrement over(std::size_t i, std::size_t j) const {
        if (i > j || j > increments.size()) throw std::invalid_argument("over: bad index pair");
        RoughIncrement acc = RoughIncrement::zero(dim);
        for (std::size_t k = i; k < j; ++k) acc = chen_combine(acc, increments[k]);
        return acc;
    }
};

/// Lift of a finely sampled path: x1 from increments, x2 by left-point
/// Riemann sums of the iterated integral on the fine grid.
inline GridRoughPath lift_smooth(const std::vector<Vec>& values, const Partition& fine,
                                 const Partition& target, double p = 2.0) {
    if (values.size() != fine.points.size())
        throw std::invalid_argument("lift_smooth: values/grid size mismatch");
    if (!target.nested_in(fine))
        throw std::invalid_argument("lift_smooth: fine grid does not refine target");
    std::size_t d = values.front().size();
    GridRoughPath x;
    x.grid = target;
    x.dim = d;
    x.p = p;
    x.increments.reserve(target.intervals());
    for (std::size_t i = 0; i + 1 < target.points.size(); ++i) {
        std::size_t lo = fine.index_of(target.points[i]);
        std::size_t hi = fine.index_of(target.points[i + 1]);
        RoughIncrement inc = RoughIncrement::zero(d);
        inc.x1 = values[hi] - values[lo];
        for (std::size_t r = lo; r < hi; ++r) {
            Vec rel = values[r] - values[lo];
            Vec dstep = values[r + 1] - values[r];
            inc.x2 = inc.x2 + outer(rel, dstep);
        }
        x.increments.push_back(std::move(inc));
    }
    return x;
}

namespace detail {

/// Brownian sub-path over one base interval via dyadic bridge refinement.
/// Draws are keyed by (seed, interval, level, segment, component) so the
/// level-0 increment (and hence x1) is identical for every subdivision.
inline std::vector<Vec> bridge_subpath(std::size_t d, double dt, std::uint64_t seed,
                                       std::uint64_t interval, unsigned levels) {
    std::size_t m = std::size_t{1} << levels;
    std::vector<Vec> w(m + 1, Vec(d, 0.0));
    for (std::size_t c = 0; c < d; ++c)
        w[m][c] = std::sqrt(dt) * keyed_normal(seed, interval, 0, 0, c);
    for (unsigned l = 1; l <= levels; ++l) {
        std::size_t seg = m >> (l - 1);       // segment length being split
        double segdt = dt / double(std::size_t{1} << (l - 1));
        for (std::size_t q = 0; q < (std::size_t{1} << (l - 1)); ++q) {
            std::size_t lo = q * seg, hi = lo + seg, mid = lo + seg / 2;
            for (std::size_t c = 0; c < d; ++c)
                w[mid][c] = 0.5 * (w[lo][c] + w[hi][c]) +
                            std::sqrt(segdt / 4.0) * keyed_normal(seed, interval, l, q, c);
        }
    }
    return w;
}

}  // namespace detail

/// Enhanced Ito Brownian motion on a base grid. Per base interval, x2 is
/// the Ito left-point sum over a dyadic sub-grid of 2^sub_levels steps;
/// diagonal entries are replaced by the exact Ito identity
/// (B_j^2 - (t-s))/2, which the left-point sum converges to.
inline GridRoughPath sample_ito_ebm(std::size_t d, const Partition& base, unsigned sub_levels,
                                    std::uint64_t seed) {
    GridRoughPath x;
    x.grid = base;
    x.dim = d;
    x.p = 2.0;
    x.increments.reserve(base.intervals());
    for (std::size_t i = 0; i + 1 < base.points.size(); ++i) {
        double dt = base.points[i + 1] - base.points[i];
        auto w = detail::bridge_subpath(d, dt, seed, i, sub_levels);
        std::size_t m = w.size() - 1;
        RoughIncrement inc = RoughIncrement::zero(d);
        inc.x1 = w[m];
        for (std::size_t r = 0; r < m; ++r) {
            Vec dstep = w[r + 1] - w[r];
            inc.x2 = inc.x2 + outer(w[r], dstep);
        }
        for (std::size_t c = 0; c < d; ++c) inc.x2(c, c) = 0.5 * (w[m][c] * w[m][c] - dt);
        x.increments.push_back(std::move(inc));
    }
    return x;
}

/// Regroup a rough path onto a coarser nested grid by exact Chen
/// aggregation; shared-node values (and all Brownian draws) are untouched.
inline GridRoughPath coarsen(const GridRoughPath& x, const Partition& coarse) {
    if (!coarse.nested_in(x.grid)) throw std::invalid_argument("coarsen: grid not nested");
    GridRoughPath out;
    out.grid = coarse;
    out.dim = x.dim;
    out.p = x.p;
    out.increments.reserve(coarse.intervals());
    for (std::size_t i = 0; i + 1 < coarse.points.size(); ++i) {
        std::size_t lo = x.grid.index_of(coarse.points[i]);
        std::size_t hi = x.grid.index_of(coarse.points[i + 1]);
        out.increments.push_back(x.over(lo, hi));
    }
    return out;
}

struct PVarReport {
    double norm = 0;
    std::size_t pairs_checked = 0;
    bool infinite = false;  // omega vanished on a pair with nonzero increment
};

/// sup over all grid pairs of |x1|/omega^{1/p} + |x2|/omega^{2/p}.
inline PVarReport pvar_norm(const GridRoughPath& x, const Control& omega) {
    PVarReport rep;
    std::size_t n = x.grid.points.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        RoughIncrement acc = RoughIncrement::zero(x.dim);
        for (std::size_t j = i + 1; j < n; ++j) {
            acc = chen_combine(acc, x.increments[j - 1]);
            double w = omega(x.grid.points[i], x.grid.points[j]);
            double n1 = norm2(acc.x1), n2 = norm2(acc.x2);
            if (w <= 0) {
                if (n1 > 0 || n2 > 0) rep.infinite = true;
                continue;
            }
            rep.norm = std::max(rep.norm,
                                n1 / std::pow(w, 1.0 / x.p) + n2 / std::pow(w, 2.0 / x.p));
            ++rep.pairs_checked;
        }
    }
    x.pvar_cache = rep.norm;
    return rep;
}

/// Max Chen-relation defect over all grid triples; zero up to rounding for
/// any path produced by this module.
inline double chen_defect(const GridRoughPath& x) {
    double worst = 0;
    std::size_t n = x.grid.points.size();
    for (std::size_t i = 0; i + 2 < n; ++i)
        for (std::size_t j = i + 1; j + 1 < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                RoughIncrement a = x.over(i, j), b = x.over(j, k), c = x.over(i, k);
                RoughIncrement ab = chen_combine(a, b);
                worst = std::max(worst, norm_inf(ab.x1 - c.x1));
                for (std::size_t q = 0; q < ab.x2.a.size(); ++q)
                    worst = std::max(worst, std::abs(ab.x2.a[q] - c.x2.a[q]));
            }
    return worst;
}

// -- columnar serialization: header (d, p, grid), then per-interval x1 and
//    x2 as little-endian 64-bit doubles --

inline void save_rough_path(const GridRoughPath& x, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_u64(x.dim);
    put_f64(x.p);
    put_u64(x.grid.points.size());
    for (double t : x.grid.points) put_f64(t);
    for (const auto& inc : x.increments) {
        for (double v : inc.x1) put_f64(v);
        for (double v : inc.x2.a) put_f64(v);
    }
}

inline GridRoughPath load_rough_path(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    auto get_u64 = [&] {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    auto get_f64 = [&] {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    GridRoughPath x;
    x.dim = static_cast<std::size_t>(get_u64());
    x.p = get_f64();
    std::size_t npts = static_cast<std::size_t>(get_u64());
    std::vector<double> pts(npts);
    for (auto& t : pts) t = get_f64();
    x.grid = Partition(std::move(pts));
    x.increments.resize(x.grid.intervals());
    for (auto& inc : x.increments) {
        inc.x1.resize(x.dim);
        for (auto& v : inc.x1) v = get_f64();
        inc.x2 = Mat(x.dim, x.dim);
        for (auto& v : inc.x2.a) v = get_f64();
    }
    if (!in) throw std::runtime_error("truncated rough-path file " + path);
    return x;
}

}  // namespace sewing
