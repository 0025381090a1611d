#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>

namespace sofic {

using Int = std::int64_t;

/// Base class of every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotSubstitutive : Error {
    using Error::Error;
};
struct NotToeplitz : Error {
    using Error::Error;
};
struct InsufficientPrefix : Error {
    using Error::Error;
};
struct WindowTooSmall : Error {
    using Error::Error;
};
struct BudgetExceeded : Error {
    using Error::Error;
};
struct NoColoringFound : Error {
    using Error::Error;
};
struct Inconsistent : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};

/// Mathematical modulus, always in [0, m).
constexpr Int floor_mod(Int a, Int m) {
    Int r = a % m;
    return r < 0 ? r + m : r;
}

constexpr Int floor_div(Int a, Int m) {
    return (a - floor_mod(a, m)) / m;
}

constexpr Int ipow(Int base, int e) {
    Int r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

struct Vec2 {
    Int x = 0;
    Int y = 0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Int k, Vec2 a) { return {k * a.x, k * a.y}; }
    friend constexpr auto operator<=>(const Vec2&, const Vec2&) = default;

    constexpr Vec2 mod(Int m) const { return {floor_mod(x, m), floor_mod(y, m)}; }
    constexpr Int chebyshev() const { return std::max(x < 0 ? -x : x, y < 0 ? -y : y); }
};

inline std::ostream& operator<<(std::ostream& os, Vec2 v) {
    return os << '(' << v.x << ',' << v.y << ')';
}

/// Integer 2x2 matrix, row-major. Used both for GL(2,Z) automorphisms and
/// for their reductions modulo p.
struct Mat2 {
    Int a11 = 1, a12 = 0, a21 = 0, a22 = 1;

    static constexpr Mat2 identity() { return {}; }

    constexpr Int det() const { return a11 * a22 - a12 * a21; }

    friend constexpr Mat2 operator*(const Mat2& l, const Mat2& r) {
        return {l.a11 * r.a11 + l.a12 * r.a21, l.a11 * r.a12 + l.a12 * r.a22,
                l.a21 * r.a11 + l.a22 * r.a21, l.a21 * r.a12 + l.a22 * r.a22};
    }
    friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
        return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

    /// Exact inverse; requires det = +-1.
    Mat2 inverse() const {
        Int d = det();
        if (d != 1 && d != -1) throw Error("matrix is not in GL(2,Z)");
        return {d * a22, -d * a12, -d * a21, d * a11};
    }

    Mat2 pow(Int n) const {
        Mat2 base = n < 0 ? inverse() : *this;
        Mat2 r;
        for (Int k = n < 0 ? -n : n; k > 0; k >>= 1) {
            if (k & 1) r = r * base;
            base = base * base;
        }
        return r;
    }
};

inline std::ostream& operator<<(std::ostream& os, const Mat2& m) {
    return os << "[[" << m.a11 << ',' << m.a12 << "],[" << m.a21 << ',' << m.a22 << "]]";
}

/// A matrix over Z/pZ, entries kept in [0, p).
struct ModMatrix {
    Mat2 m;
    Int p = 3;

    constexpr Int det() const { return floor_mod(m.det(), p); }
    constexpr bool invertible() const { return det() == 1 || det() == p - 1; }

    Vec2 apply(Vec2 v) const { return (m * v).mod(p); }

    friend ModMatrix operator*(const ModMatrix& l, const ModMatrix& r) {
        Mat2 prod = l.m * r.m;
        return {{floor_mod(prod.a11, l.p), floor_mod(prod.a12, l.p), floor_mod(prod.a21, l.p),
                 floor_mod(prod.a22, l.p)},
                l.p};
    }
    friend bool operator==(const ModMatrix&, const ModMatrix&) = default;
};

/// Entrywise reduction of an automorphism modulo p (p >= 3).
inline ModMatrix reduce_mod_p(const Mat2& a, Int p = 3) {
    if (p < 3) throw Error("modulus must be at least 3");
    return {{floor_mod(a.a11, p), floor_mod(a.a12, p), floor_mod(a.a21, p), floor_mod(a.a22, p)},
            p};
}

}  // namespace sofic
