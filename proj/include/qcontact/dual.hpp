#ifndef QCONTACT_DUAL_HPP
#define QCONTACT_DUAL_HPP

#include "qcontact/expr.hpp"

namespace qcontact {

// Hyper-dual number: value, two directional first-order parts and the mixed
// second-order part, i.e. the truncated Taylor algebra
//   x = f + a eps_a + b eps_b + ab eps_a eps_b,   eps_a^2 = eps_b^2 = 0.
// Seeding a along e_i and b along e_j makes .ab the mixed partial d2/dxi dxj.
// The component type may itself be a Dual2, which yields derivatives of
// derivative pipelines (used for Jacobians of the Lagrangian vector field).
template <class T>
struct Dual2 {
    T f{}, a{}, b{}, ab{};

    Dual2() = default;
    Dual2(double c) : f(c) {}
    Dual2(T f_, T a_, T b_, T ab_)
        : f(std::move(f_)), a(std::move(a_)), b(std::move(b_)), ab(std::move(ab_)) {}
};

using Dual2d = Dual2<double>;
using Dual2dd = Dual2<Dual2<double>>;

template <class T>
Dual2<T> operator+(const Dual2<T>& x, const Dual2<T>& y) {
    return {x.f + y.f, x.a + y.a, x.b + y.b, x.ab + y.ab};
}

template <class T>
Dual2<T> operator-(const Dual2<T>& x, const Dual2<T>& y) {
    return {x.f - y.f, x.a - y.a, x.b - y.b, x.ab - y.ab};
}

template <class T>
Dual2<T> operator-(const Dual2<T>& x) {
    return {-x.f, -x.a, -x.b, -x.ab};
}

template <class T>
Dual2<T> operator*(const Dual2<T>& x, const Dual2<T>& y) {
    return {x.f * y.f,
            x.f * y.a + x.a * y.f,
            x.f * y.b + x.b * y.f,
            x.f * y.ab + x.a * y.b + x.b * y.a + x.ab * y.f};
}

// Mixed double overloads avoid promoting plain constants through the algebra.
template <class T> Dual2<T> operator+(const Dual2<T>& x, double c) { return x + Dual2<T>(c); }
template <class T> Dual2<T> operator+(double c, const Dual2<T>& x) { return Dual2<T>(c) + x; }
template <class T> Dual2<T> operator-(const Dual2<T>& x, double c) { return x - Dual2<T>(c); }
template <class T> Dual2<T> operator-(double c, const Dual2<T>& x) { return Dual2<T>(c) - x; }
template <class T> Dual2<T> operator*(const Dual2<T>& x, double c) { return x * Dual2<T>(c); }
template <class T> Dual2<T> operator*(double c, const Dual2<T>& x) { return Dual2<T>(c) * x; }

template <class T>
double scalar_value(const Dual2<T>& x) {
    return scalar_value(x.f);
}

// Lift a scalar function g with derivatives dg, d2g through the algebra.
template <class T>
Dual2<T> chain(const Dual2<T>& u, T g, T dg, T d2g) {
    return {std::move(g), dg * u.a, dg * u.b, d2g * (u.a * u.b) + dg * u.ab};
}

template <class T>
Dual2<T> reciprocal(const Dual2<T>& u) {
    T inv = T(1.0) / u.f;
    T inv2 = inv * inv;
    return chain(u, inv, -inv2, T(2.0) * inv2 * inv);
}

template <class T>
Dual2<T> pow_scalar(const Dual2<T>& u, double c) {
    if (c == 0.0) return Dual2<T>(1.0);
    if (c == 1.0) return u;
    if (c == 2.0) return u * u;
    T g = pow_scalar(u.f, c);
    T dg = c * pow_scalar(u.f, c - 1.0);
    T d2g = (c * (c - 1.0)) * pow_scalar(u.f, c - 2.0);
    return chain(u, std::move(g), std::move(dg), std::move(d2g));
}

template <class T>
Dual2<T> sin_s(const Dual2<T>& u) {
    T s = sin_s(u.f), c = cos_s(u.f);
    return chain(u, s, c, -s);
}

template <class T>
Dual2<T> cos_s(const Dual2<T>& u) {
    T s = sin_s(u.f), c = cos_s(u.f);
    return chain(u, c, -s, -c);
}

template <class T>
Dual2<T> exp_s(const Dual2<T>& u) {
    T e = exp_s(u.f);
    return chain(u, e, e, e);
}

template <class T>
Dual2<T> log_s(const Dual2<T>& u) {
    if (scalar_value(u.f) <= 0.0) throw DomainError("log of non-positive argument");
    T inv = T(1.0) / u.f;
    return chain(u, log_s(u.f), inv, -(inv * inv));
}

template <class T>
Dual2<T> sqrt_s(const Dual2<T>& u) {
    if (scalar_value(u.f) < 0.0) throw DomainError("sqrt of negative argument");
    T r = sqrt_s(u.f);
    T dr = T(0.5) / r;
    return chain(u, r, dr, T(-0.5) * dr / u.f);
}

template <class T>
Dual2<T> tanh_s(const Dual2<T>& u) {
    T t = tanh_s(u.f);
    T sech2 = T(1.0) - t * t;
    return chain(u, t, sech2, T(-2.0) * t * sech2);
}

// Derivative convention at the kink: sign(0) = +1, second derivative 0.
template <class T>
Dual2<T> abs_s(const Dual2<T>& u) {
    double s = scalar_value(u.f) < 0.0 ? -1.0 : 1.0;
    return chain(u, s < 0 ? -u.f : u.f, T(s), T(0.0));
}

template <class T>
Dual2<T> pow_general(const Dual2<T>& x, const Dual2<T>& y) {
    if (scalar_value(x.f) <= 0.0)
        throw DomainError("x^y with variable exponent requires x > 0");
    return exp_s(y * log_s(x));
}

template <class T>
Dual2<T> operator/(const Dual2<T>& x, const Dual2<T>& y) {
    return x * reciprocal(y);
}

template <class T> Dual2<T> operator/(const Dual2<T>& x, double c) { return x / Dual2<T>(c); }
template <class T> Dual2<T> operator/(double c, const Dual2<T>& x) { return Dual2<T>(c) / x; }

} // namespace qcontact

#endif // QCONTACT_DUAL_HPP
