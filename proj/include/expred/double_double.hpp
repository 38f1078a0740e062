#pragma once

#include <cmath>
#include <complex>
#include <limits>

namespace expred
{

///
/// \brief Two-term compensated floating-point scalar ("double-double").
///
/// Represents the unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, giving
/// roughly 32 significant decimal digits.  The spectral kernels in this
/// library (rank-revealing decomposition, one-sided Jacobi, Schur iteration,
/// root polishing, closed-form error evaluation) require that much working
/// precision to deliver small singular values and reduction errors with full
/// relative accuracy; plain binary64 loses them to cancellation.
///
/// Only the operations those kernels need are provided: +, -, *, /, sqrt,
/// abs and comparisons.  Every primitive is one of the classical error-free
/// transforms (Dekker/Knuth two_sum, fma-based two_prod), so each operation
/// is accurate to the representation's own precision.
///
struct ddouble
{
    double hi{0.0};
    double lo{0.0};

    constexpr ddouble() = default;
    constexpr ddouble(double h) : hi(h) {} // NOLINT: implicit by design
    constexpr ddouble(double h, double l) : hi(h), lo(l) {}
};

namespace detail
{

/// Error-free sum: returns (s, e) with s = fl(a+b) and a+b = s+e exactly.
inline ddouble two_sum(double a, double b)
{
    const double s  = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

/// Error-free sum assuming |a| >= |b|.
inline ddouble quick_two_sum(double a, double b)
{
    const double s = a + b;
    return {s, b - (s - a)};
}

/// Error-free product: returns (p, e) with p = fl(a*b) and a*b = p+e exactly.
inline ddouble two_prod(double a, double b)
{
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

} // namespace detail

inline ddouble operator-(const ddouble& a) { return {-a.hi, -a.lo}; }

inline ddouble operator+(const ddouble& a, const ddouble& b)
{
    ddouble s = detail::two_sum(a.hi, b.hi);
    const ddouble t = detail::two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = detail::quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return detail::quick_two_sum(s.hi, s.lo);
}

inline ddouble operator+(const ddouble& a, double b)
{
    ddouble s = detail::two_sum(a.hi, b);
    s.lo += a.lo;
    return detail::quick_two_sum(s.hi, s.lo);
}

inline ddouble operator+(double a, const ddouble& b) { return b + a; }

inline ddouble operator-(const ddouble& a, const ddouble& b) { return a + (-b); }
inline ddouble operator-(const ddouble& a, double b) { return a + (-b); }
inline ddouble operator-(double a, const ddouble& b) { return (-b) + a; }

inline ddouble operator*(const ddouble& a, const ddouble& b)
{
    ddouble p = detail::two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return detail::quick_two_sum(p.hi, p.lo);
}

inline ddouble operator*(const ddouble& a, double b)
{
    ddouble p = detail::two_prod(a.hi, b);
    p.lo += a.lo * b;
    return detail::quick_two_sum(p.hi, p.lo);
}

inline ddouble operator*(double a, const ddouble& b) { return b * a; }

inline ddouble operator/(const ddouble& a, const ddouble& b)
{
    // Long division with two correction terms (accurate to ~106 bits).
    const double q1 = a.hi / b.hi;
    ddouble r = a - b * q1;
    const double q2 = r.hi / b.hi;
    r = r - b * q2;
    const double q3 = r.hi / b.hi;
    ddouble q = detail::quick_two_sum(q1, q2);
    return q + q3;
}

inline ddouble operator/(const ddouble& a, double b) { return a / ddouble(b); }
inline ddouble operator/(double a, const ddouble& b) { return ddouble(a) / b; }

inline ddouble& operator+=(ddouble& a, const ddouble& b) { return a = a + b; }
inline ddouble& operator-=(ddouble& a, const ddouble& b) { return a = a - b; }
inline ddouble& operator*=(ddouble& a, const ddouble& b) { return a = a * b; }
inline ddouble& operator/=(ddouble& a, const ddouble& b) { return a = a / b; }

inline bool operator==(const ddouble& a, const ddouble& b) { return a.hi == b.hi && a.lo == b.lo; }
inline bool operator!=(const ddouble& a, const ddouble& b) { return !(a == b); }
inline bool operator<(const ddouble& a, const ddouble& b)
{
    return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}
inline bool operator>(const ddouble& a, const ddouble& b) { return b < a; }
inline bool operator<=(const ddouble& a, const ddouble& b) { return !(b < a); }
inline bool operator>=(const ddouble& a, const ddouble& b) { return !(a < b); }

inline double to_double(const ddouble& a) { return a.hi + a.lo; }

inline ddouble abs(const ddouble& a) { return (a.hi < 0.0 || (a.hi == 0.0 && a.lo < 0.0)) ? -a : a; }

inline ddouble sqrt(const ddouble& a)
{
    if (a.hi == 0.0 && a.lo == 0.0)
    {
        return {};
    }
    // One Karp/Markstein-style correction of the double estimate doubles the
    // accurate bit count, which is exactly what the two-term format holds.
    const double x  = 1.0 / std::sqrt(a.hi);
    const double ax = a.hi * x;
    const ddouble r = a - ddouble(ax) * ddouble(ax);
    return detail::quick_two_sum(ax, r.hi * (x * 0.5));
}

inline bool isfinite(const ddouble& a) { return std::isfinite(a.hi) && std::isfinite(a.lo); }

///
/// \brief Complex number with double-double real and imaginary parts.
///
/// Companion type to ddouble for the high-precision spectral kernels.
/// Division uses the textbook conj-multiply formula; the magnitudes handled
/// by this library stay far away from binary64 overflow/underflow, so no
/// scaling is required.
///
struct ddcomplex
{
    ddouble re{};
    ddouble im{};

    constexpr ddcomplex() = default;
    constexpr ddcomplex(double r) : re(r) {} // NOLINT: implicit by design
    constexpr ddcomplex(const ddouble& r) : re(r) {} // NOLINT: implicit by design
    constexpr ddcomplex(const ddouble& r, const ddouble& i) : re(r), im(i) {}
    ddcomplex(const std::complex<double>& z) : re(z.real()), im(z.imag()) {} // NOLINT
};

inline ddcomplex operator-(const ddcomplex& a) { return {-a.re, -a.im}; }

inline ddcomplex operator+(const ddcomplex& a, const ddcomplex& b) { return {a.re + b.re, a.im + b.im}; }
inline ddcomplex operator-(const ddcomplex& a, const ddcomplex& b) { return {a.re - b.re, a.im - b.im}; }

inline ddcomplex operator*(const ddcomplex& a, const ddcomplex& b)
{
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

inline ddcomplex operator*(const ddcomplex& a, const ddouble& s) { return {a.re * s, a.im * s}; }
inline ddcomplex operator*(const ddouble& s, const ddcomplex& a) { return a * s; }
inline ddcomplex operator*(const ddcomplex& a, double s) { return {a.re * s, a.im * s}; }
inline ddcomplex operator*(double s, const ddcomplex& a) { return a * s; }

inline ddcomplex operator/(const ddcomplex& a, const ddouble& s) { return {a.re / s, a.im / s}; }

inline ddcomplex conj(const ddcomplex& a) { return {a.re, -a.im}; }

/// Squared magnitude |a|^2.
inline ddouble norm_sqr(const ddcomplex& a) { return a.re * a.re + a.im * a.im; }

inline ddouble abs(const ddcomplex& a) { return sqrt(norm_sqr(a)); }

inline ddcomplex operator/(const ddcomplex& a, const ddcomplex& b)
{
    const ddouble d = norm_sqr(b);
    const ddcomplex n = a * conj(b);
    return {n.re / d, n.im / d};
}

inline ddcomplex& operator+=(ddcomplex& a, const ddcomplex& b) { return a = a + b; }
inline ddcomplex& operator-=(ddcomplex& a, const ddcomplex& b) { return a = a - b; }
inline ddcomplex& operator*=(ddcomplex& a, const ddcomplex& b) { return a = a * b; }
inline ddcomplex& operator/=(ddcomplex& a, const ddcomplex& b) { return a = a / b; }

inline bool operator==(const ddcomplex& a, const ddcomplex& b) { return a.re == b.re && a.im == b.im; }
inline bool operator!=(const ddcomplex& a, const ddcomplex& b) { return !(a == b); }

inline std::complex<double> to_complex(const ddcomplex& a)
{
    return {to_double(a.re), to_double(a.im)};
}

inline ddouble real(const ddcomplex& a) { return a.re; }
inline ddouble imag(const ddcomplex& a) { return a.im; }

} // namespace expred
