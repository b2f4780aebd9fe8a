#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fenelab {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double a) const { return {a * x, a * y}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }

    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double a, Vec2 v) { return v * a; }

// Symmetric or general 2x2 matrix, row major.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    static Mat2 zero() { return {}; }
    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 outer(Vec2 u, Vec2 v) { return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y}; }

    Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
    Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
    Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
    Mat2 operator*(double c) const { return {c * a11, c * a12, c * a21, c * a22}; }
    Mat2& operator+=(const Mat2& o) { a11 += o.a11; a12 += o.a12; a21 += o.a21; a22 += o.a22; return *this; }

    Mat2 matmul(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }

    double trace() const { return a11 + a22; }
    double frobenius() const { return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22); }
    double asymmetry() const { return std::abs(a12 - a21); }

    // Eigenvalues of the symmetric part; returns {min, max}.
    struct EigPair { double lo, hi; };
    EigPair sym_eigenvalues() const {
        const double m = 0.5 * (a11 + a22);
        const double d = 0.5 * (a11 - a22);
        const double off = 0.5 * (a12 + a21);
        const double rad = std::sqrt(d * d + off * off);
        return {m - rad, m + rad};
    }
    double operator_norm() const {
        auto [lo, hi] = sym_eigenvalues();
        return std::max(std::abs(lo), std::abs(hi));
    }
};

inline double wrap_angle(double a) {
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    return a;
}

inline Vec2 wrap_torus(Vec2 x) { return {wrap_angle(x.x), wrap_angle(x.y)}; }

// Error taxonomy shared by the modules.
struct unsolvable_step : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numerical_breakdown : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fenelab
