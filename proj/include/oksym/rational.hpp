// Exact rationals for symmetry shifts and the unit-circle phases they induce.
//
// All group shifts have small denominators, so every phase that appears is a
// root of unity exp(2*pi*i*p/q).  Angles that are multiples of pi/12 (q | 24,
// which covers every crystallographic shift product) are evaluated from exact
// surd tables; anything else falls back to a narrow-interval cosine.

#pragma once

#include <complex>
#include <cstdint>
#include <numeric>

#include "interval.hpp"

namespace oksym {

struct Rat {
    std::int64_t p = 0;
    std::int64_t q = 1;

    Rat() = default;
    Rat(std::int64_t num, std::int64_t den) : p(num), q(den) { normalize(); }
    explicit Rat(std::int64_t num) : p(num), q(1) {}

    void normalize() {
        if (q == 0) throw DomainError("rational: zero denominator");
        if (q < 0) {
            p = -p;
            q = -q;
        }
        std::int64_t g = std::gcd(p < 0 ? -p : p, q);
        if (g > 1) {
            p /= g;
            q /= g;
        }
    }

    double value() const { return double(p) / double(q); }
    bool is_zero() const { return p == 0; }

    // representative in [0,1)
    Rat mod1() const {
        std::int64_t r = p % q;
        if (r < 0) r += q;
        return Rat(r, q);
    }

    friend Rat operator+(const Rat& a, const Rat& b) { return Rat(a.p * b.q + b.p * a.q, a.q * b.q); }
    friend Rat operator-(const Rat& a, const Rat& b) { return Rat(a.p * b.q - b.p * a.q, a.q * b.q); }
    friend Rat operator-(const Rat& a) { return Rat(-a.p, a.q); }
    friend Rat operator*(const Rat& a, const Rat& b) { return Rat(a.p * b.p, a.q * b.q); }
    friend Rat operator*(std::int64_t a, const Rat& b) { return Rat(a * b.p, b.q); }
    friend bool operator==(const Rat& a, const Rat& b) { return a.p == b.p && a.q == b.q; }
    friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
    friend bool operator<(const Rat& a, const Rat& b) { return a.p * b.q < b.p * a.q; }
};

// Angle a in units of full turns, exact; the phase is exp(2*pi*i*a).
class PhaseAngle {
  public:
    PhaseAngle() : turns_(0, 1) {}
    explicit PhaseAngle(Rat turns) : turns_(turns.mod1()) {}

    const Rat& turns() const { return turns_; }
    bool is_one() const { return turns_.is_zero(); }

    PhaseAngle inverse() const { return PhaseAngle(-turns_); }

    friend PhaseAngle operator*(const PhaseAngle& a, const PhaseAngle& b) {
        return PhaseAngle(a.turns_ + b.turns_);
    }
    friend bool operator==(const PhaseAngle& a, const PhaseAngle& b) {
        return a.turns_ == b.turns_;
    }

    std::complex<double> value() const {
        CInterval z = enclosure();
        return {z.re.mid(), z.im.mid()};
    }

    // Interval rectangle containing exp(2*pi*i*turns); a few ulp wide.
    CInterval enclosure() const {
        if (24 % turns_.q == 0) {
            int n = int(turns_.p * (24 / turns_.q));  // angle = n * 15 degrees
            return exact_step15(n);
        }
        Interval ang = pi_iv() * Interval(2.0) * Interval(turns_.value());
        // turns_.value() is within 1/2 ulp; widen so the true angle is inside
        Interval ang_w(detail::step_down(ang.lower(), 2), detail::step_up(ang.upper(), 2));
        return CInterval(cos_narrow(ang_w), sin_narrow(ang_w));
    }

  private:
    // cos/sin of n*15deg via surds: cos table on [0..6] covers a quadrant.
    static Interval quadrant_cos(int n) {
        const Interval one(1.0), half(0.5);
        switch (n) {
            case 0: return one;
            case 1: return (sqrt(Interval(6.0)) + sqrt(Interval(2.0))) / 4.0;
            case 2: return sqrt(Interval(3.0)) / 2.0;
            case 3: return sqrt(Interval(2.0)) / 2.0;
            case 4: return half;
            case 5: return (sqrt(Interval(6.0)) - sqrt(Interval(2.0))) / 4.0;
            default: return Interval(0.0);
        }
    }

    static CInterval exact_step15(int n) {
        n %= 24;
        if (n < 0) n += 24;
        int quadrant = n / 6;
        int r = n % 6;
        Interval c = quadrant_cos(r);
        Interval s = quadrant_cos(6 - r);
        switch (quadrant) {
            case 0: return CInterval(c, s);
            case 1: return CInterval(-s, c);
            case 2: return CInterval(-c, -s);
            default: return CInterval(s, -c);
        }
    }

    Rat turns_;
};

}  // namespace oksym
