#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace sewing {

using Vec = std::vector<double>;

/// Dense row-major matrix, sized once at construction.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

/// Rank-3 tensor with index layout [i][j][k].
struct Tensor3 {
    std::size_t n1 = 0, n2 = 0, n3 = 0;
    std::vector<double> a;

    Tensor3() = default;
    Tensor3(std::size_t d1, std::size_t d2, std::size_t d3, double fill = 0.0)
        : n1(d1), n2(d2), n3(d3), a(d1 * d2 * d3, fill) {}

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return a[(i * n2 + j) * n3 + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return a[(i * n2 + j) * n3 + k];
    }
};

inline Vec operator+(const Vec& x, const Vec& y) {
    assert(x.size() == y.size());
    Vec z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
    return z;
}

inline Vec operator-(const Vec& x, const Vec& y) {
    assert(x.size() == y.size());
    Vec z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
    return z;
}

inline Vec operator*(double c, const Vec& x) {
    Vec z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = c * x[i];
    return z;
}

inline Vec& operator+=(Vec& x, const Vec& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    return x;
}

inline double norm2(const Vec& x) {
    double s = 0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline double norm2(const Mat& m) {
    double s = 0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

inline double norm_inf(const Vec& x) {
    double s = 0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

/// Outer product x ⊗ y.
inline Mat outer(const Vec& x, const Vec& y) {
    Mat m(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * y[j];
    return m;
}

inline Mat operator+(const Mat& x, const Mat& y) {
    assert(x.rows == y.rows && x.cols == y.cols);
    Mat z(x.rows, x.cols);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = x.a[i] + y.a[i];
    return z;
}

inline Mat operator-(const Mat& x, const Mat& y) {
    assert(x.rows == y.rows && x.cols == y.cols);
    Mat z(x.rows, x.cols);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = x.a[i] - y.a[i];
    return z;
}

/// Matrix acting on a vector: (m a)_i = sum_j m_ij a_j.
inline Vec matvec(const Mat& m, const Vec& x) {
    assert(m.cols == x.size());
    Vec y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) y[i] += m(i, j) * x[j];
    return y;
}

/// Contraction of a rank-3 tensor against a matrix over its last two
/// indices: y_i = sum_{j,k} t_ijk m_jk.
inline Vec contract(const Tensor3& t, const Mat& m) {
    assert(t.n2 == m.rows && t.n3 == m.cols);
    Vec y(t.n1, 0.0);
    for (std::size_t i = 0; i < t.n1; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < t.n2; ++j)
            for (std::size_t k = 0; k < t.n3; ++k) s += t(i, j, k) * m(j, k);
        y[i] = s;
    }
    return y;
}

}  // namespace sewing
