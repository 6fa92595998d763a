#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sewing {

/// Super-additive cost omega_{s,t} over the time simplex, with a declared
/// horizon. Super-additivity is checked on sampled triples, not proven.
struct Control {
    std::function<double(double, double)> eval;
    double horizon = 1.0;
    std::string name = "custom";

    double operator()(double s, double t) const { return eval(s, t); }
};

inline Control linear_control(double T, double scale = 1.0) {
    return Control{[scale](double s, double t) { return scale * (t - s); }, T, "linear"};
}

/// Remainder function varpi with its dyadic-halving constant kappa
/// (2 varpi(x/2) <= kappa varpi(x)).
struct Remainder {
    std::function<double(double)> eval;
    double kappa = 0.0;
    std::string name = "custom";

    double operator()(double x) const { return eval(x); }
};

/// varpi(x) = x^theta; kappa = 2^(1-theta) exactly.
inline Remainder power_remainder(double theta) {
    return Remainder{[theta](double x) { return std::pow(x, theta); },
                     std::pow(2.0, 1.0 - theta), "pow"};
}

struct DeltaFunction {
    std::function<double(double)> eval;

    double operator()(double h) const { return eval(h); }
};

inline DeltaFunction power_delta(double c, double alpha) {
    return DeltaFunction{[c, alpha](double h) { return c * std::pow(h, alpha); }};
}

struct Partition {
    std::vector<double> points;  // strictly increasing, t_0 = 0 .. t_n = T

    Partition() = default;
    explicit Partition(std::vector<double> pts) : points(std::move(pts)) {
        for (std::size_t i = 0; i + 1 < points.size(); ++i)
            if (points[i] >= points[i + 1])
                throw std::invalid_argument("partition points must be strictly increasing");
        if (points.size() < 2) throw std::invalid_argument("partition needs at least two points");
    }

    static Partition uniform(double T, std::size_t n) {
        std::vector<double> pts(n + 1);
        for (std::size_t i = 0; i <= n; ++i) pts[i] = T * static_cast<double>(i) / n;
        pts[n] = T;
        return Partition(std::move(pts));
    }

    std::size_t intervals() const { return points.size() - 1; }
    double horizon() const { return points.back(); }

    double mesh() const {
        double m = 0;
        for (std::size_t i = 0; i + 1 < points.size(); ++i)
            m = std::max(m, points[i + 1] - points[i]);
        return m;
    }

    /// True if every point of this partition appears in sigma.
    bool nested_in(const Partition& sigma, double tol = 1e-12) const {
        std::size_t j = 0;
        for (double p : points) {
            while (j < sigma.points.size() && sigma.points[j] < p - tol) ++j;
            if (j >= sigma.points.size() || std::abs(sigma.points[j] - p) > tol) return false;
        }
        return true;
    }

    std::size_t index_of(double t, double tol = 1e-12) const {
        for (std::size_t i = 0; i < points.size(); ++i)
            if (std::abs(points[i] - t) <= tol) return i;
        throw std::invalid_argument("time is not a partition point");
    }
};

enum class RefineRule { Dyadic, InsertMidpoints };

inline Partition refine(const Partition& pi, RefineRule rule) {
    // both rules insert interval midpoints; Dyadic kept as its own name
    // since dyadic refinement of a uniform grid halves the mesh exactly
    std::vector<double> pts;
    pts.reserve(2 * pi.points.size());
    for (std::size_t i = 0; i + 1 < pi.points.size(); ++i) {
        pts.push_back(pi.points[i]);
        pts.push_back(0.5 * (pi.points[i] + pi.points[i + 1]));
    }
    pts.push_back(pi.points.back());
    (void)rule;
    return Partition(std::move(pts));
}

inline Partition refine(const Partition& pi, const std::vector<double>& extra) {
    std::vector<double> pts = pi.points;
    for (double t : extra) {
        for (double p : pts)
            if (p == t) throw std::invalid_argument("duplicate point in refinement");
        pts.push_back(t);
    }
    std::sort(pts.begin(), pts.end());
    return Partition(std::move(pts));
}

inline Partition refine_dyadic(const Partition& pi, unsigned levels) {
    Partition out = pi;
    for (unsigned k = 0; k < levels; ++k) out = refine(out, RefineRule::Dyadic);
    return out;
}

/// sup over the grid of 2 varpi(x/2) / varpi(x); the caller rejects the
/// remainder when the result is >= 1.
inline double certify_kappa(const std::function<double(double)>& varpi,
                            const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("certify_kappa: empty grid");
    double kappa = 0;
    for (double x : grid) {
        if (x <= 0) throw std::invalid_argument("certify_kappa: grid values must be positive");
        double vx = varpi(x);
        if (vx <= 0) throw std::domain_error("certify_kappa: degenerate remainder (varpi(x)=0)");
        kappa = std::max(kappa, 2.0 * varpi(x / 2) / vx);
    }
    return kappa;
}

/// Log-spaced certification grid spanning [xmin, xmax], n >= 64 points.
inline std::vector<double> log_grid(double xmin, double xmax, std::size_t n = 64) {
    std::vector<double> g(n);
    double l0 = std::log(xmin), l1 = std::log(xmax);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / (n - 1));
    return g;
}

inline bool time_horizon_ok(double kappa, const DeltaFunction& delta, double T) {
    if (kappa <= 0 || kappa >= 1) throw std::invalid_argument("time_horizon_ok: kappa not in (0,1)");
    return kappa + 2.0 * delta(T) < 1.0;
}

/// mu_{s,t}(pi): worst ratio varpi(omega)/omega over partition intervals
/// meeting [s,t]. Intervals with omega = 0 contribute 0.
inline double mu(const Partition& pi, const Control& omega, const Remainder& varpi, double s,
                 double t) {
    double m = 0;
    for (std::size_t i = 0; i + 1 < pi.points.size(); ++i) {
        double u = pi.points[i], v = pi.points[i + 1];
        if (v <= s || u >= t) continue;
        double w = omega(u, v);
        if (w > 0) m = std::max(m, varpi(w) / w);
    }
    return m;
}

}  // namespace sewing
