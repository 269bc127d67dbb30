#pragma once

#include <cmath>
#include <ostream>

#include "ksnh/errors.hpp"

namespace ksnh {

// a + b e1 + c e2 + d e1e2 with e1^2 = e2^2 = 0.
struct HyperDual {
    double real = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d12 = 0.0;

    constexpr HyperDual() = default;
    constexpr HyperDual(double r) : real(r) {}  // NOLINT: implicit on purpose
    constexpr HyperDual(double r, double a, double b, double c) : real(r), d1(a), d2(b), d12(c) {}

    static constexpr HyperDual variable(double x, bool first, bool second) {
        return {x, first ? 1.0 : 0.0, second ? 1.0 : 0.0, 0.0};
    }
};

namespace detail {
// g(a) given g, g', g'' evaluated at a.real
inline HyperDual chain(const HyperDual& a, double g, double g1, double g2) {
    return {g, g1 * a.d1, g1 * a.d2, g1 * a.d12 + g2 * a.d1 * a.d2};
}
}  // namespace detail

inline HyperDual operator+(const HyperDual& a) { return a; }
inline HyperDual operator-(const HyperDual& a) { return {-a.real, -a.d1, -a.d2, -a.d12}; }

inline HyperDual operator+(const HyperDual& a, const HyperDual& b) {
    return {a.real + b.real, a.d1 + b.d1, a.d2 + b.d2, a.d12 + b.d12};
}
inline HyperDual operator-(const HyperDual& a, const HyperDual& b) {
    return {a.real - b.real, a.d1 - b.d1, a.d2 - b.d2, a.d12 - b.d12};
}
inline HyperDual operator*(const HyperDual& a, const HyperDual& b) {
    return {a.real * b.real, a.real * b.d1 + a.d1 * b.real, a.real * b.d2 + a.d2 * b.real,
            a.real * b.d12 + a.d1 * b.d2 + a.d2 * b.d1 + a.d12 * b.real};
}
inline HyperDual recip(const HyperDual& b) {
    if (b.real == 0.0) throw DomainError("division by zero", b.real);
    const double r = 1.0 / b.real;
    return detail::chain(b, r, -r * r, 2.0 * r * r * r);
}
// Real part is a.real / b.real exactly, matching plain double division.
inline HyperDual operator/(const HyperDual& a, const HyperDual& b) {
    if (b.real == 0.0) throw DomainError("division by zero", b.real);
    const double q = a.real / b.real;
    const double q1 = (a.d1 - q * b.d1) / b.real;
    const double q2 = (a.d2 - q * b.d2) / b.real;
    return {q, q1, q2, (a.d12 - q * b.d12 - q1 * b.d2 - q2 * b.d1) / b.real};
}

inline HyperDual& operator+=(HyperDual& a, const HyperDual& b) { return a = a + b; }
inline HyperDual& operator-=(HyperDual& a, const HyperDual& b) { return a = a - b; }
inline HyperDual& operator*=(HyperDual& a, const HyperDual& b) { return a = a * b; }
inline HyperDual& operator/=(HyperDual& a, const HyperDual& b) { return a = a / b; }

inline HyperDual sin(const HyperDual& a) {
    const double s = std::sin(a.real), c = std::cos(a.real);
    return detail::chain(a, s, c, -s);
}
inline HyperDual cos(const HyperDual& a) {
    const double s = std::sin(a.real), c = std::cos(a.real);
    return detail::chain(a, c, -s, -c);
}
inline HyperDual tan(const HyperDual& a) {
    const double c = std::cos(a.real);
    if (c == 0.0) throw DomainError("tan pole", a.real);
    const double t = std::tan(a.real);
    const double sec2 = 1.0 + t * t;
    return detail::chain(a, t, sec2, 2.0 * t * sec2);
}
inline HyperDual exp(const HyperDual& a) {
    const double e = std::exp(a.real);
    return detail::chain(a, e, e, e);
}
inline HyperDual log(const HyperDual& a) {
    if (!(a.real > 0.0)) throw DomainError("log of non-positive argument", a.real);
    const double r = 1.0 / a.real;
    return detail::chain(a, std::log(a.real), r, -r * r);
}
inline HyperDual sqrt(const HyperDual& a) {
    if (a.real < 0.0) throw DomainError("sqrt of negative argument", a.real);
    const double s = std::sqrt(a.real);
    if (s == 0.0) {
        if (a.d1 == 0.0 && a.d2 == 0.0 && a.d12 == 0.0) return {0.0};
        throw DomainError("sqrt not differentiable at zero", a.real);
    }
    return detail::chain(a, s, 0.5 / s, -0.25 / (s * a.real));
}

inline bool is_integer(double p) { return std::isfinite(p) && std::floor(p) == p; }

// Constant exponent. Integer exponents work for any base; otherwise base > 0.
inline HyperDual pow(const HyperDual& a, double p) {
    if (p == 0.0) return {1.0};
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    if (is_integer(p)) {
        if (a.real == 0.0) {
            if (p < 0.0) throw DomainError("zero raised to a negative power", a.real);
            // derivative terms through second order only
            if (p == 1.0) return a;
            if (p == 2.0) return a * a;
            return {0.0};
        }
    } else if (!(a.real > 0.0)) {
        throw DomainError("non-integer power of non-positive base", a.real);
    }
    const double g = std::pow(a.real, p);
    const double g1 = p * std::pow(a.real, p - 1.0);
    const double g2 = p * (p - 1.0) * std::pow(a.real, p - 2.0);
    return detail::chain(a, g, g1, g2);
}

inline HyperDual pow(const HyperDual& a, const HyperDual& b) {
    if (b.d1 == 0.0 && b.d2 == 0.0 && b.d12 == 0.0) return pow(a, b.real);
    if (!(a.real > 0.0)) throw DomainError("variable exponent needs a positive base", a.real);
    return exp(b * log(a));
}

inline std::ostream& operator<<(std::ostream& os, const HyperDual& a) {
    return os << '(' << a.real << ", " << a.d1 << ", " << a.d2 << ", " << a.d12 << ')';
}

// Plain-double overloads sharing the hyperdual domain rules.
inline double recip(double b) {
    if (b == 0.0) throw DomainError("division by zero", b);
    return 1.0 / b;
}

}  // namespace ksnh
