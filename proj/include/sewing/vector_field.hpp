#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sewing/linalg.hpp"
#include "sewing/rng.hpp"

namespace sewing {

/// Vector field f: V -> L(U,V). eval(a) is the m x d matrix f(a);
/// deriv(a), when available, is Df(a) with layout [i][j][l] = d f_ij / d a_l.
struct VectorField {
    std::size_t m = 1;  // state dimension
    std::size_t d = 1;  // driver dimension
    double gamma = 1.0;
    std::function<Mat(const Vec&)> eval;
    std::function<Tensor3(const Vec&)> deriv;  // may be empty
    std::vector<double> declared_bounds;       // sup norms per derivative level
    std::string name = "custom";

    bool has_deriv() const { return static_cast<bool>(deriv); }
};

/// f2(a) = Df(a) . f(a) acting on U⊗U: [i][j][k] = sum_l Df[i][j][l] f[l][k].
inline Tensor3 f2(const VectorField& f, const Vec& a) {
    if (!f.has_deriv()) throw std::invalid_argument("f2: field has no derivative");
    Mat fa = f.eval(a);
    Tensor3 dfa = f.deriv(a);
    Tensor3 out(f.m, f.d, f.d);
    for (std::size_t i = 0; i < f.m; ++i)
        for (std::size_t j = 0; j < f.d; ++j)
            for (std::size_t k = 0; k < f.d; ++k) {
                double s = 0;
                for (std::size_t l = 0; l < f.m; ++l) s += dfa(i, j, l) * fa(l, k);
                out(i, j, k) = s;
            }
    return out;
}

// -- test-field library --

inline VectorField constant_field(Mat c) {
    VectorField f;
    f.m = c.rows;
    f.d = c.cols;
    f.gamma = 1.0;
    f.eval = [c](const Vec&) { return c; };
    std::size_t m = c.rows, d = c.cols;
    f.deriv = [m, d](const Vec&) { return Tensor3(m, d, m); };
    f.declared_bounds = {norm2(c), 0.0};
    f.name = "const";
    return f;
}

/// Scalar field f(a) = c a (m = d = 1).
inline VectorField linear_scalar_field(double c) {
    VectorField f;
    f.gamma = 1.0;
    f.eval = [c](const Vec& a) {
        Mat v(1, 1);
        v(0, 0) = c * a[0];
        return v;
    };
    f.deriv = [c](const Vec&) {
        Tensor3 t(1, 1, 1);
        t(0, 0, 0) = c;
        return t;
    };
    f.declared_bounds = {};  // unbounded; restrict to a working ball
    f.name = "linear";
    return f;
}

/// General affine field f(a)[i][j] = sum_l A[i][j][l] a[l] + b[i][j].
inline VectorField affine_field(Tensor3 A, Mat b) {
    VectorField f;
    f.m = A.n1;
    f.d = A.n2;
    f.gamma = 1.0;
    f.eval = [A, b](const Vec& a) {
        Mat v = b;
        for (std::size_t i = 0; i < A.n1; ++i)
            for (std::size_t j = 0; j < A.n2; ++j) {
                double s = 0;
                for (std::size_t l = 0; l < A.n3; ++l) s += A(i, j, l) * a[l];
                v(i, j) += s;
            }
        return v;
    };
    f.deriv = [A](const Vec&) { return A; };
    f.name = "affine";
    return f;
}

/// Bounded scalar field f(a) = amp sin(a).
inline VectorField sin_field(double amp = 1.0) {
    VectorField f;
    f.gamma = 1.0;
    f.eval = [amp](const Vec& a) {
        Mat v(1, 1);
        v(0, 0) = amp * std::sin(a[0]);
        return v;
    };
    f.deriv = [amp](const Vec& a) {
        Tensor3 t(1, 1, 1);
        t(0, 0, 0) = amp * std::cos(a[0]);
        return t;
    };
    f.declared_bounds = {amp, amp, amp};
    f.name = "sin";
    return f;
}

/// Planar rotation field (m = 2, d = 1): f(a) = amp (-a_2, a_1).
inline VectorField rotation_field(double amp = 1.0) {
    VectorField f;
    f.m = 2;
    f.d = 1;
    f.gamma = 1.0;
    f.eval = [amp](const Vec& a) {
        Mat v(2, 1);
        v(0, 0) = -amp * a[1];
        v(1, 0) = amp * a[0];
        return v;
    };
    f.deriv = [amp](const Vec&) {
        Tensor3 t(2, 1, 2);
        t(0, 0, 1) = -amp;
        t(1, 0, 0) = amp;
        return t;
    };
    f.name = "sinrot";
    return f;
}

/// Scalar f(a) = scale |a|^{1+gamma}: C^{1+gamma} but not C^2 at the kink.
inline VectorField rough_field(double gamma, double scale = 1.0) {
    VectorField f;
    f.gamma = gamma;
    f.eval = [gamma, scale](const Vec& a) {
        Mat v(1, 1);
        v(0, 0) = scale * std::pow(std::abs(a[0]), 1.0 + gamma);
        return v;
    };
    f.deriv = [gamma, scale](const Vec& a) {
        Tensor3 t(1, 1, 1);
        double s = a[0] >= 0 ? 1.0 : -1.0;
        t(0, 0, 0) = scale * (1.0 + gamma) * s * std::pow(std::abs(a[0]), gamma);
        return t;
    };
    f.name = "rough";
    return f;
}

// -- Hölder-seminorm estimation --

struct HolderReport {
    unsigned level = 0;
    double exponent = 1.0;
    double estimate = 0.0;
    std::size_t pairs = 0;
};

/// Sampled sup of the lambda-Hölder quotient at the given derivative level
/// over point pairs in the ball of radius R. Monotone in sample count.
inline HolderReport estimate_holder(const VectorField& f, unsigned level, double lambda,
                                    double R, std::size_t samples, std::uint64_t seed) {
    if (level > 1) throw std::invalid_argument("estimate_holder: only levels 0 and 1");
    if (level == 1 && !f.has_deriv())
        throw std::invalid_argument("estimate_holder: level 1 needs a derivative");
    KeyStream ks(seed);
    auto draw = [&] {
        Vec a(f.m);
        for (auto& v : a) v = ks.uniform(-R, R);
        return a;
    };
    auto value_norm_diff = [&](const Vec& a, const Vec& b) {
        if (level == 0) return norm2(f.eval(a) - f.eval(b));
        Tensor3 da = f.deriv(a), db = f.deriv(b);
        double s = 0;
        for (std::size_t q = 0; q < da.a.size(); ++q) s += (da.a[q] - db.a[q]) * (da.a[q] - db.a[q]);
        return std::sqrt(s);
    };
    HolderReport rep;
    rep.level = level;
    rep.exponent = lambda;
    for (std::size_t k = 0; k < samples; ++k) {
        Vec a = draw(), b = draw();
        // include pairs at all scales, down to ~1e-6 apart
        double shrink = std::pow(10.0, -6.0 * ks.uniform());
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = a[i] + shrink * (b[i] - a[i]);
        double dist = norm2(a - b);
        if (dist <= 0) continue;
        rep.estimate = std::max(rep.estimate, value_norm_diff(a, b) / std::pow(dist, lambda));
        ++rep.pairs;
    }
    return rep;
}

// -- Gaussian mollification by tensorized 7-point Gauss-Hermite quadrature --

namespace detail {

inline constexpr std::array<double, 7> kGhNodes = {
    -2.6519613568352334, -1.6735516287674714, -0.8162878828589647, 0.0,
    0.8162878828589647,  1.6735516287674714,  2.6519613568352334};
inline constexpr std::array<double, 7> kGhWeights = {
    9.7178124509951915e-04, 5.4515582819127030e-02, 4.2560725261012780e-01,
    8.1026461755680733e-01, 4.2560725261012780e-01, 5.4515582819127030e-02,
    9.7178124509951915e-04};
inline constexpr double kSqrtPi = 1.7724538509055160273;

/// E g(a + h Z), Z standard normal in R^m, g matrix/tensor-valued via the
/// supplied accumulator. Tensorized quadrature, capped at m <= 3.
template <class Eval, class Out>
Out gauss_expectation(std::size_t m, const Vec& a, double h, Eval eval, Out acc) {
    if (m > 3) throw std::invalid_argument("mollify: dimension capped at 3");
    std::vector<std::size_t> idx(m, 0);
    const double scale = std::sqrt(2.0) * h;
    for (;;) {
        double w = 1.0;
        Vec pt = a;
        for (std::size_t i = 0; i < m; ++i) {
            w *= kGhWeights[idx[i]] / kSqrtPi;
            pt[i] += scale * kGhNodes[idx[i]];
        }
        auto v = eval(pt);
        for (std::size_t q = 0; q < acc.a.size(); ++q) acc.a[q] += w * v.a[q];
        std::size_t i = 0;
        for (; i < m; ++i) {
            if (++idx[i] < kGhNodes.size()) break;
            idx[i] = 0;
        }
        if (i == m) break;
    }
    return acc;
}

}  // namespace detail

/// Gaussian smoothing with standard deviation h. The returned field always
/// exposes a derivative: the quadrature of Df when f has one, otherwise the
/// Stein identity D E f(a+hZ) = E[f(a+hZ) Z]/h.
inline VectorField mollify(const VectorField& f, double h) {
    if (h <= 0) throw std::invalid_argument("mollify: h must be positive");
    VectorField g;
    g.m = f.m;
    g.d = f.d;
    g.gamma = 1.0;  // smoothed field is C^infinity on the working region
    g.declared_bounds = f.declared_bounds;
    g.name = f.name + "_mollified";
    std::size_t m = f.m, d = f.d;
    auto feval = f.eval;
    g.eval = [m, d, h, feval](const Vec& a) {
        return detail::gauss_expectation(m, a, h, feval, Mat(m, d));
    };
    if (f.has_deriv()) {
        auto fderiv = f.deriv;
        g.deriv = [m, d, h, fderiv](const Vec& a) {
            return detail::gauss_expectation(m, a, h, fderiv, Tensor3(m, d, m));
        };
    } else {
        g.deriv = [m, d, h, feval](const Vec& a) {
            Tensor3 out(m, d, m);
            for (std::size_t l = 0; l < m; ++l) {
                auto weighted = [&](const Vec& pt) {
                    Mat v = feval(pt);
                    double z = (pt[l] - a[l]) / h;
                    for (auto& q : v.a) q *= z / h;
                    return v;
                };
                Mat dl = detail::gauss_expectation(m, a, h, weighted, Mat(m, d));
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d; ++j) out(i, j, l) = dl(i, j);
            }
            return out;
        };
    }
    return g;
}

}  // namespace sewing
