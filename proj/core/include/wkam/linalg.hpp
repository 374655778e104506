#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

namespace wkam {

// Small fixed-capacity vector/matrix types for torus dimensions 1 and 2.
// The runtime dimension is carried explicitly; unused slots stay zero, which
// keeps arithmetic on mixed-literal code paths harmless.

struct Vec {
    int dim = 1;
    std::array<double, 2> v{0.0, 0.0};

    Vec() = default;
    explicit Vec(double x) : dim(1), v{x, 0.0} {}
    Vec(double x, double y) : dim(2), v{x, y} {}
    static Vec zero(int d) { Vec z; z.dim = d; return z; }

    double& operator[](int i) { return v[static_cast<size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<size_t>(i)]; }
};

inline Vec operator+(Vec a, const Vec& b) {
    for (int i = 0; i < a.dim; ++i) a[i] += b[i];
    return a;
}
inline Vec operator-(Vec a, const Vec& b) {
    for (int i = 0; i < a.dim; ++i) a[i] -= b[i];
    return a;
}
inline Vec operator*(double s, Vec a) {
    for (int i = 0; i < a.dim; ++i) a[i] *= s;
    return a;
}
inline Vec operator-(Vec a) {
    for (int i = 0; i < a.dim; ++i) a[i] = -a[i];
    return a;
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
    return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline bool finite(const Vec& a) {
    for (int i = 0; i < a.dim; ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

// Symmetric matrix, row-major 2x2 capacity.
struct Mat {
    int dim = 1;
    std::array<double, 4> a{1.0, 0.0, 0.0, 1.0};

    static Mat identity(int d) {
        Mat m;
        m.dim = d;
        return m;
    }
    double& at(int i, int j) { return a[static_cast<size_t>(2 * i + j)]; }
    double at(int i, int j) const { return a[static_cast<size_t>(2 * i + j)]; }
};

inline Vec matvec(const Mat& m, const Vec& x) {
    Vec y = Vec::zero(x.dim);
    for (int i = 0; i < m.dim; ++i)
        for (int j = 0; j < m.dim; ++j) y[i] += m.at(i, j) * x[j];
    return y;
}

// <A x, x>
inline double quad_form(const Mat& m, const Vec& x) { return dot(matvec(m, x), x); }

inline double det(const Mat& m) {
    if (m.dim == 1) return m.at(0, 0);
    return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
}

inline Mat inverse(const Mat& m) {
    Mat r;
    r.dim = m.dim;
    if (m.dim == 1) {
        r.at(0, 0) = 1.0 / m.at(0, 0);
        return r;
    }
    const double d = det(m);
    r.at(0, 0) = m.at(1, 1) / d;
    r.at(1, 1) = m.at(0, 0) / d;
    r.at(0, 1) = -m.at(0, 1) / d;
    r.at(1, 0) = -m.at(1, 0) / d;
    return r;
}

// Smallest eigenvalue of a symmetric 1x1 / 2x2 matrix.
inline double min_eigenvalue(const Mat& m) {
    if (m.dim == 1) return m.at(0, 0);
    const double tr = m.at(0, 0) + m.at(1, 1);
    const double dd = m.at(0, 0) - m.at(1, 1);
    const double disc = std::sqrt(dd * dd + 4.0 * m.at(0, 1) * m.at(1, 0));
    return 0.5 * (tr - disc);
}

inline double max_eigenvalue(const Mat& m) {
    if (m.dim == 1) return m.at(0, 0);
    const double tr = m.at(0, 0) + m.at(1, 1);
    const double dd = m.at(0, 0) - m.at(1, 1);
    const double disc = std::sqrt(dd * dd + 4.0 * m.at(0, 1) * m.at(1, 0));
    return 0.5 * (tr + disc);
}

// Shortest repeatable formatting of a double (deterministic output files).
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace wkam
