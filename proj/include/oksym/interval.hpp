// Outward-rounded interval arithmetic.
//
// Every rigorous bound in this library is computed through the Interval type
// below.  The contract is containment: for any operation op and any points
// a in A, b in B, op(a,b) lies in op(A,B).
//
// Rounding realization: the field operations + - * / and sqrt use error-free
// transformations (TwoSum / fma residuals) to decide whether the nearest-
// rounded endpoint is exact, and step one ulp outward only when it is not.
// This yields exactly the endpoints that hardware directed rounding would
// produce, without touching the FP environment (safe under concurrency).
// Transcendental endpoints (exp, log, pow) rely on the C library being
// faithfully rounded and are inflated by ULP_SLACK ulps on each side.

#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace oksym {

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline constexpr int ULP_SLACK = 4;  // inflation for libm-based endpoints

inline double next_up(double x) {
    if (std::isnan(x)) throw DomainError("interval: NaN endpoint");
    if (x == std::numeric_limits<double>::infinity()) return x;
    return std::nextafter(x, std::numeric_limits<double>::infinity());
}

inline double next_down(double x) {
    if (std::isnan(x)) throw DomainError("interval: NaN endpoint");
    if (x == -std::numeric_limits<double>::infinity()) return x;
    return std::nextafter(x, -std::numeric_limits<double>::infinity());
}

inline double step_up(double x, int n) {
    for (int i = 0; i < n; ++i) x = next_up(x);
    return x;
}

inline double step_down(double x, int n) {
    for (int i = 0; i < n; ++i) x = next_down(x);
    return x;
}

// Knuth TwoSum: s = fl(a+b), err exact, a+b = s+err.
inline void two_sum(double a, double b, double& s, double& err) {
    s = a + b;
    double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
}

// round-down / round-up of the exact sum a+b
inline double add_down(double a, double b) {
    double s, e;
    two_sum(a, b, s, e);
    if (std::isinf(s)) return s > 0 ? DBL_MAX : s;
    return e < 0 ? next_down(s) : s;
}

inline double add_up(double a, double b) {
    double s, e;
    two_sum(a, b, s, e);
    if (std::isinf(s)) return s > 0 ? s : -DBL_MAX;
    return e > 0 ? next_up(s) : s;
}

inline double sub_down(double a, double b) { return add_down(a, -b); }
inline double sub_up(double a, double b) { return add_up(a, -b); }

// round-down / round-up of the exact product a*b (fma residual is exact)
inline double mul_down(double a, double b) {
    double p = a * b;
    if (std::isinf(p)) return p > 0 ? DBL_MAX : p;
    double e = std::fma(a, b, -p);
    return e < 0 ? next_down(p) : p;
}

inline double mul_up(double a, double b) {
    double p = a * b;
    if (std::isinf(p)) return p > 0 ? p : -DBL_MAX;
    double e = std::fma(a, b, -p);
    return e > 0 ? next_up(p) : p;
}

// Directed quotient: the residual a - q*b is exactly representable, so its
// sign tells on which side of the exact quotient q fell.
inline double div_down(double a, double b) {
    double q = a / b;
    if (std::isinf(q)) return q > 0 ? DBL_MAX : q;
    double r = std::fma(-q, b, a);  // a - q*b, exact
    if (r == 0.0) return q;
    bool exact_above = (r > 0) == (b > 0);  // exact = q + r/b
    return exact_above ? q : next_down(q);
}

inline double div_up(double a, double b) {
    double q = a / b;
    if (std::isinf(q)) return q > 0 ? q : -DBL_MAX;
    double r = std::fma(-q, b, a);
    if (r == 0.0) return q;
    bool exact_above = (r > 0) == (b > 0);
    return exact_above ? next_up(q) : q;
}

inline double sqrt_down(double a) {
    double s = std::sqrt(a);
    double r = std::fma(s, s, -a);  // s*s - a, exact
    return r > 0 ? next_down(s) : s;
}

inline double sqrt_up(double a) {
    double s = std::sqrt(a);
    double r = std::fma(s, s, -a);
    return r < 0 ? next_up(s) : s;
}

}  // namespace detail

class Interval {
  public:
    Interval() : lo_(0.0), hi_(0.0) {}

    explicit Interval(double x) : lo_(x), hi_(x) { check(); }

    Interval(double lo, double hi) : lo_(lo), hi_(hi) {
        if (std::isnan(lo) || std::isnan(hi) || lo > hi)
            throw DomainError("interval: invalid endpoints");
    }

    double lower() const { return lo_; }
    double upper() const { return hi_; }
    double mid() const { return 0.5 * (lo_ + hi_); }
    double width() const { return detail::sub_up(hi_, lo_); }
    double rad() const { return detail::mul_up(0.5, width()); }

    // max / min modulus over the interval
    double mag() const { return std::max(std::fabs(lo_), std::fabs(hi_)); }
    double mig() const {
        if (contains(0.0)) return 0.0;
        return std::min(std::fabs(lo_), std::fabs(hi_));
    }

    bool contains(double x) const { return lo_ <= x && x <= hi_; }
    bool contains(const Interval& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }
    bool strictly_positive() const { return lo_ > 0.0; }
    bool strictly_negative() const { return hi_ < 0.0; }

    static Interval hull(const Interval& a, const Interval& b) {
        return Interval(std::min(a.lo_, b.lo_), std::max(a.hi_, b.hi_));
    }

    Interval& operator+=(const Interval& o) { return *this = *this + o; }
    Interval& operator-=(const Interval& o) { return *this = *this - o; }
    Interval& operator*=(const Interval& o) { return *this = *this * o; }
    Interval& operator/=(const Interval& o) { return *this = *this / o; }

    friend Interval operator-(const Interval& a) { return Interval(-a.hi_, -a.lo_); }

    friend Interval operator+(const Interval& a, const Interval& b) {
        return Interval(detail::add_down(a.lo_, b.lo_), detail::add_up(a.hi_, b.hi_));
    }

    friend Interval operator-(const Interval& a, const Interval& b) {
        return Interval(detail::sub_down(a.lo_, b.hi_), detail::sub_up(a.hi_, b.lo_));
    }

    friend Interval operator*(const Interval& a, const Interval& b) {
        double los[4] = {detail::mul_down(a.lo_, b.lo_), detail::mul_down(a.lo_, b.hi_),
                         detail::mul_down(a.hi_, b.lo_), detail::mul_down(a.hi_, b.hi_)};
        double his[4] = {detail::mul_up(a.lo_, b.lo_), detail::mul_up(a.lo_, b.hi_),
                         detail::mul_up(a.hi_, b.lo_), detail::mul_up(a.hi_, b.hi_)};
        return Interval(*std::min_element(los, los + 4), *std::max_element(his, his + 4));
    }

    friend Interval operator/(const Interval& a, const Interval& b) {
        if (b.contains(0.0)) throw DomainError("interval: division by interval containing 0");
        double los[4] = {detail::div_down(a.lo_, b.lo_), detail::div_down(a.lo_, b.hi_),
                         detail::div_down(a.hi_, b.lo_), detail::div_down(a.hi_, b.hi_)};
        double his[4] = {detail::div_up(a.lo_, b.lo_), detail::div_up(a.lo_, b.hi_),
                         detail::div_up(a.hi_, b.lo_), detail::div_up(a.hi_, b.hi_)};
        return Interval(*std::min_element(los, los + 4), *std::max_element(his, his + 4));
    }

    friend Interval operator+(const Interval& a, double b) { return a + Interval(b); }
    friend Interval operator+(double a, const Interval& b) { return Interval(a) + b; }
    friend Interval operator-(const Interval& a, double b) { return a - Interval(b); }
    friend Interval operator-(double a, const Interval& b) { return Interval(a) - b; }
    friend Interval operator*(const Interval& a, double b) { return a * Interval(b); }
    friend Interval operator*(double a, const Interval& b) { return Interval(a) * b; }
    friend Interval operator/(const Interval& a, double b) { return a / Interval(b); }
    friend Interval operator/(double a, const Interval& b) { return Interval(a) / b; }

    friend bool operator==(const Interval& a, const Interval& b) {
        return a.lo_ == b.lo_ && a.hi_ == b.hi_;
    }

  private:
    void check() const {
        if (std::isnan(lo_)) throw DomainError("interval: NaN");
    }
    double lo_, hi_;
};

inline Interval sqrt(const Interval& a) {
    if (a.lower() < 0.0) throw DomainError("interval sqrt: negative argument");
    return Interval(detail::sqrt_down(a.lower()), detail::sqrt_up(a.upper()));
}

inline Interval abs(const Interval& a) { return Interval(a.mig(), a.mag()); }

inline Interval min(const Interval& a, const Interval& b) {
    return Interval(std::min(a.lower(), b.lower()), std::min(a.upper(), b.upper()));
}

inline Interval max(const Interval& a, const Interval& b) {
    return Interval(std::max(a.lower(), b.lower()), std::max(a.upper(), b.upper()));
}

inline Interval sq(const Interval& a) {
    // tighter than a*a when 0 is inside
    double m = a.mag(), n = a.mig();
    return Interval(detail::mul_down(n, n), detail::mul_up(m, m));
}

inline Interval pow_int(const Interval& a, long n) {
    if (n == 0) return Interval(1.0);
    if (n < 0) return Interval(1.0) / pow_int(a, -n);
    if (n % 2 == 0) {
        // monotone in |x|
        double lo = a.mig(), hi = a.mag();
        double plo = 1.0, phi = 1.0;
        for (long i = 0; i < n; ++i) {
            plo = detail::mul_down(plo, lo);
            phi = detail::mul_up(phi, hi);
        }
        return Interval(plo, phi);
    }
    // odd: monotone in x, so take enclosures of lo^n and hi^n
    Interval xlo(a.lower()), xhi(a.upper());
    Interval plo(1.0), phi(1.0);
    for (long i = 0; i < n; ++i) {
        plo = plo * xlo;
        phi = phi * xhi;
    }
    return Interval(plo.lower(), phi.upper());
}

inline Interval exp(const Interval& a) {
    double lo = detail::step_down(std::exp(a.lower()), detail::ULP_SLACK);
    double hi = detail::step_up(std::exp(a.upper()), detail::ULP_SLACK);
    return Interval(std::max(lo, 0.0), hi);
}

inline Interval log(const Interval& a) {
    if (a.lower() <= 0.0) throw DomainError("interval log: nonpositive argument");
    return Interval(detail::step_down(std::log(a.lower()), detail::ULP_SLACK),
                    detail::step_up(std::log(a.upper()), detail::ULP_SLACK));
}

// base > 0, real exponent; pow(b,e) = exp(e*log(b))
inline Interval pow_real(const Interval& base, const Interval& expo) {
    if (base.lower() <= 0.0) throw DomainError("interval pow: nonpositive base");
    return exp(expo * log(base));
}

inline Interval pi_iv() {
    return Interval(detail::next_down(M_PI), detail::next_up(M_PI));
}

// cosine/sine for *narrow* inputs only (phase evaluation of rational angles
// that are not multiples of pi/12).  |cos'| <= 1 bounds the drift from the
// midpoint; libm error is covered by the ulp slack.
inline Interval cos_narrow(const Interval& a) {
    double r = a.rad();
    if (!(r <= 1e-6)) throw DomainError("cos_narrow: interval too wide");
    double c = std::cos(a.mid());
    Interval v(detail::step_down(c, detail::ULP_SLACK), detail::step_up(c, detail::ULP_SLACK));
    Interval drift(-detail::next_up(r), detail::next_up(r));
    Interval out = v + drift;
    return Interval(std::max(out.lower(), -1.0), std::min(out.upper(), 1.0));
}

inline Interval sin_narrow(const Interval& a) {
    double r = a.rad();
    if (!(r <= 1e-6)) throw DomainError("sin_narrow: interval too wide");
    double s = std::sin(a.mid());
    Interval v(detail::step_down(s, detail::ULP_SLACK), detail::step_up(s, detail::ULP_SLACK));
    Interval drift(-detail::next_up(r), detail::next_up(r));
    Interval out = v + drift;
    return Interval(std::max(out.lower(), -1.0), std::min(out.upper(), 1.0));
}

// --- generic scalar access, so templated formulas run on double or Interval

inline double upper(double x) { return x; }
inline double lower(double x) { return x; }
inline double upper(const Interval& x) { return x.upper(); }
inline double lower(const Interval& x) { return x.lower(); }
inline double midpoint(double x) { return x; }
inline double midpoint(const Interval& x) { return x.mid(); }

// Rectangle enclosure of a complex number: independent real/imaginary parts.
class CInterval {
  public:
    Interval re, im;

    CInterval() = default;
    CInterval(Interval r, Interval i) : re(r), im(i) {}
    explicit CInterval(double r, double i = 0.0) : re(r), im(i) {}

    static CInterval exact(double r, double i) { return CInterval(Interval(r), Interval(i)); }

    CInterval conj() const { return CInterval(re, -im); }

    friend CInterval operator+(const CInterval& a, const CInterval& b) {
        return CInterval(a.re + b.re, a.im + b.im);
    }
    friend CInterval operator-(const CInterval& a, const CInterval& b) {
        return CInterval(a.re - b.re, a.im - b.im);
    }
    friend CInterval operator-(const CInterval& a) { return CInterval(-a.re, -a.im); }
    friend CInterval operator*(const CInterval& a, const CInterval& b) {
        return CInterval(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
    }
    friend CInterval operator*(const Interval& a, const CInterval& b) {
        return CInterval(a * b.re, a * b.im);
    }
    friend CInterval operator*(const CInterval& a, const Interval& b) { return b * a; }
    friend CInterval operator*(double a, const CInterval& b) { return Interval(a) * b; }
    CInterval& operator+=(const CInterval& o) { return *this = *this + o; }
    CInterval& operator-=(const CInterval& o) { return *this = *this - o; }
    CInterval& operator*=(const CInterval& o) { return *this = *this * o; }

    // |z| enclosure
    Interval abs() const { return oksym::sqrt(sq(re) + sq(im)); }

    bool contains(double r, double i) const { return re.contains(r) && im.contains(i); }
};

}  // namespace oksym
