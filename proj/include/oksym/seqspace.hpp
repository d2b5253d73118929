// Symmetry-reduced coefficient vectors and their expansion to full Fourier
// fields, with the weighted l1 norms and the convolution algebra.
//
// Reduced vectors carry one complex slot per stored mode (slot 0 is the mean).
// Everything is templated over the scalar: std::complex<double> for numerics,
// CInterval for rigorous bound computations.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "interval.hpp"
#include "spacegroup.hpp"

namespace oksym {

template <class C>
struct scalar_of;
template <>
struct scalar_of<std::complex<double>> {
    using type = double;
};
template <>
struct scalar_of<CInterval> {
    using type = Interval;
};

template <class C>
C phase_as(const PhaseAngle& a);
template <>
inline std::complex<double> phase_as(const PhaseAngle& a) {
    return a.value();
}
template <>
inline CInterval phase_as(const PhaseAngle& a) {
    return a.enclosure();
}

template <class C>
C conj_of(const C& v);
template <>
inline std::complex<double> conj_of(const std::complex<double>& v) {
    return std::conj(v);
}
template <>
inline CInterval conj_of(const CInterval& v) {
    return v.conj();
}

template <class C>
typename scalar_of<C>::type abs_of(const C& v);
template <>
inline double abs_of(const std::complex<double>& v) {
    return std::abs(v);
}
template <>
inline Interval abs_of(const CInterval& v) {
    return v.abs();
}

template <class C>
struct BasicReducedCoeffs {
    const ReducedIndexSet* set = nullptr;
    std::vector<C> v;  // one slot per mode of the set, slot 0 is the zero mode

    BasicReducedCoeffs() = default;
    explicit BasicReducedCoeffs(const ReducedIndexSet& s) : set(&s), v(s.modes.size()) {}

    std::size_t size() const { return v.size(); }
    C& operator[](std::size_t i) { return v[i]; }
    const C& operator[](std::size_t i) const { return v[i]; }
};

using ReducedCoeffs = BasicReducedCoeffs<std::complex<double>>;
using ReducedCoeffsIv = BasicReducedCoeffs<CInterval>;

inline ReducedCoeffsIv lift(const ReducedCoeffs& b) {
    ReducedCoeffsIv out(*b.set);
    for (std::size_t i = 0; i < b.v.size(); ++i)
        out.v[i] = CInterval(Interval(b.v[i].real()), Interval(b.v[i].imag()));
    return out;
}

inline CInterval lift(const std::complex<double>& z) {
    return CInterval(Interval(z.real()), Interval(z.imag()));
}

// Dense box of Fourier coefficients; zero outside the box.
template <class C>
struct BasicFullCoeffs {
    Idx lo{0, 0, 0};
    Idx hi{-1, -1, -1};  // empty by default
    std::vector<C> data;

    BasicFullCoeffs() = default;
    BasicFullCoeffs(const Idx& lo_, const Idx& hi_) : lo(lo_), hi(hi_) {
        data.assign(cells(), C{});
    }

    std::size_t cells() const {
        std::size_t n = 1;
        for (int i = 0; i < 3; ++i) {
            if (hi[i] < lo[i]) return 0;
            n *= std::size_t(hi[i] - lo[i] + 1);
        }
        return n;
    }
    bool in_box(const Idx& k) const {
        for (int i = 0; i < 3; ++i)
            if (k[i] < lo[i] || k[i] > hi[i]) return false;
        return true;
    }
    std::size_t offset(const Idx& k) const {
        std::size_t o = 0;
        for (int i = 0; i < 3; ++i) o = o * std::size_t(hi[i] - lo[i] + 1) + std::size_t(k[i] - lo[i]);
        return o;
    }
    C at(const Idx& k) const { return in_box(k) ? data[offset(k)] : C{}; }
    C& ref(const Idx& k) { return data[offset(k)]; }

    template <class Fn>
    void for_each(Fn&& fn) const {
        Idx k;
        for (k[0] = lo[0]; k[0] <= hi[0]; ++k[0])
            for (k[1] = lo[1]; k[1] <= hi[1]; ++k[1])
                for (k[2] = lo[2]; k[2] <= hi[2]; ++k[2]) fn(k, data[offset(k)]);
    }
};

using FullCoeffs = BasicFullCoeffs<std::complex<double>>;
using FullCoeffsIv = BasicFullCoeffs<CInterval>;

inline FullCoeffsIv lift_full(const FullCoeffs& c) {
    FullCoeffsIv out(c.lo, c.hi);
    for (std::size_t i = 0; i < c.data.size(); ++i) out.data[i] = lift(c.data[i]);
    return out;
}

// sigma: distribute each reduced coefficient over its orbit with the stored
// relative phases. The result is invariant under the whole group action.
template <class C>
BasicFullCoeffs<C> sigma_expand(const BasicReducedCoeffs<C>& b) {
    const ReducedIndexSet& rs = *b.set;
    Idx lo{0, 0, 0}, hi{0, 0, 0};
    for (const auto& m : rs.modes)
        for (const auto& p : m.orbit)
            for (int i = 0; i < 3; ++i) {
                lo[i] = std::min(lo[i], p[i]);
                hi[i] = std::max(hi[i], p[i]);
            }
    BasicFullCoeffs<C> out(lo, hi);
    for (std::size_t mi = 0; mi < rs.modes.size(); ++mi) {
        const Mode& m = rs.modes[mi];
        for (std::size_t oi = 0; oi < m.orbit.size(); ++oi)
            out.ref(m.orbit[oi]) = phase_as<C>(m.alpha_t[oi]) * b.v[mi];
    }
    return out;
}

// Full group action on a coefficient field: (gamma_g c)_k = alpha_g(k) c_{beta_g k}.
template <class C>
BasicFullCoeffs<C> act(const SpaceGroup& g, const GroupElement& e, const BasicFullCoeffs<C>& c) {
    (void)g;
    Mat3 binv = mat_inverse_unimodular(e.beta);
    Idx lo{0, 0, 0}, hi{-1, -1, -1};
    bool first = true;
    for (int cx = 0; cx < 2; ++cx)
        for (int cy = 0; cy < 2; ++cy)
            for (int cz = 0; cz < 2; ++cz) {
                Idx corner{cx ? c.hi[0] : c.lo[0], cy ? c.hi[1] : c.lo[1], cz ? c.hi[2] : c.lo[2]};
                Idx m = mat_apply(binv, corner);
                if (first) {
                    lo = hi = m;
                    first = false;
                } else
                    for (int i = 0; i < 3; ++i) {
                        lo[i] = std::min(lo[i], m[i]);
                        hi[i] = std::max(hi[i], m[i]);
                    }
            }
    BasicFullCoeffs<C> out(lo, hi);
    Idx k;
    for (k[0] = lo[0]; k[0] <= hi[0]; ++k[0])
        for (k[1] = lo[1]; k[1] <= hi[1]; ++k[1])
            for (k[2] = lo[2]; k[2] <= hi[2]; ++k[2]) {
                C val = c.at(mat_apply(e.beta, k));
                out.ref(k) = phase_as<C>(alpha(e, k)) * val;
            }
    return out;
}

template <class C>
BasicFullCoeffs<C> convolve(const BasicFullCoeffs<C>& a, const BasicFullCoeffs<C>& b) {
    if (a.cells() == 0 || b.cells() == 0) return {};
    BasicFullCoeffs<C> out(a.lo + b.lo, a.hi + b.hi);
    a.for_each([&](const Idx& ka, const C& va) {
        b.for_each([&](const Idx& kb, const C& vb) { out.ref(ka + kb) = out.ref(ka + kb) + va * vb; });
    });
    return out;
}

template <class C>
BasicFullCoeffs<C> square(const BasicFullCoeffs<C>& c) {
    return convolve(c, c);
}

template <class C>
BasicFullCoeffs<C> cube(const BasicFullCoeffs<C>& c) {
    return convolve(square(c), c);
}

// nu^|k| style weight of a single lattice point (no orbit factor).
inline double point_weight(const SpaceGroup& g, const Idx& k, const std::vector<double>& kappa_bar,
                           double nu) {
    return std::pow(nu, g.knorm(k, kappa_bar));
}

inline Interval point_weight_iv(const SpaceGroup& g, const Idx& k,
                                const std::vector<double>& kappa_bar, double nu) {
    if (k == Idx{0, 0, 0}) return Interval(1.0);
    std::vector<Interval> kb(kappa_bar.begin(), kappa_bar.end());
    return pow_real(Interval(nu), sqrt(g.delta(k, kb)));
}

// Reduced-space norm over all stored modes (the zero slot included).
template <class C>
typename scalar_of<C>::type norm_X(const BasicReducedCoeffs<C>& b) {
    using S = typename scalar_of<C>::type;
    S acc{};
    for (std::size_t i = 0; i < b.v.size(); ++i) {
        const Mode& m = b.set->modes[i];
        if constexpr (std::is_same_v<S, double>)
            acc += abs_of(b.v[i]) * m.omega;
        else
            acc = acc + abs_of(b.v[i]) * m.omega_iv;
    }
    return acc;
}

// Same sum without the zero slot.
template <class C>
typename scalar_of<C>::type norm_X0(const BasicReducedCoeffs<C>& b) {
    using S = typename scalar_of<C>::type;
    S acc{};
    for (std::size_t i = 1; i < b.v.size(); ++i) {
        const Mode& m = b.set->modes[i];
        if constexpr (std::is_same_v<S, double>)
            acc += abs_of(b.v[i]) * m.omega;
        else
            acc = acc + abs_of(b.v[i]) * m.omega_iv;
    }
    return acc;
}

// Dual norm on reduced vectors: sup over nonzero modes of |q_k| / omega_k.
inline double dual_norm_X0(const ReducedCoeffs& q) {
    double acc = 0.0;
    for (std::size_t i = 1; i < q.v.size(); ++i)
        acc = std::max(acc, std::abs(q.v[i]) / q.set->modes[i].omega);
    return acc;
}

inline Interval dual_norm_X0_iv(const ReducedCoeffsIv& q) {
    Interval acc(0.0);
    for (std::size_t i = 1; i < q.v.size(); ++i)
        acc = max(acc, q.v[i].abs() / q.set->modes[i].omega_iv);
    return acc;
}

// Scale-variable norms: max_j |v_j|/kappa_j and the dual sum_j |q_j| kappa_j.
inline double norm_kappa(const std::vector<std::complex<double>>& v,
                         const std::vector<double>& kappa_bar) {
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) acc = std::max(acc, std::abs(v[j]) / kappa_bar[j]);
    return acc;
}

inline double dual_norm_kappa(const std::vector<std::complex<double>>& q,
                              const std::vector<double>& kappa_bar) {
    double acc = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) acc += std::abs(q[j]) * kappa_bar[j];
    return acc;
}

inline Interval dual_norm_kappa_iv(const std::vector<CInterval>& q,
                                   const std::vector<double>& kappa_bar) {
    Interval acc(0.0);
    for (std::size_t j = 0; j < q.size(); ++j) acc = acc + q[j].abs() * Interval(kappa_bar[j]);
    return acc;
}

// Full-field weighted l1 norm sum_k |c_k| nu^knorm(k).
inline double norm_nu(const FullCoeffs& c, const SpaceGroup& g, const std::vector<double>& kappa_bar,
                      double nu) {
    double acc = 0.0;
    c.for_each([&](const Idx& k, const std::complex<double>& v) {
        if (v != std::complex<double>{}) acc += std::abs(v) * point_weight(g, k, kappa_bar, nu);
    });
    return acc;
}

inline Interval norm_nu_iv(const FullCoeffsIv& c, const SpaceGroup& g,
                           const std::vector<double>& kappa_bar, double nu) {
    Interval acc(0.0);
    c.for_each([&](const Idx& k, const CInterval& v) {
        Interval a = v.abs();
        if (a.upper() != 0.0) acc = acc + a * point_weight_iv(g, k, kappa_bar, nu);
    });
    return acc;
}

// sigma(b)_{-k} for the mode at position i: phi_k b_{tau(k)}.
template <class C>
C sigma_at_minus(const BasicReducedCoeffs<C>& b, std::size_t i) {
    const Mode& m = b.set->modes[i];
    return phase_as<C>(m.phi) * b.v[std::size_t(m.tau)];
}

// Projection onto the conjugate-symmetric subspace: (b + I_* b)/2, a fixed
// point of the conjugation and idempotent.
inline ReducedCoeffs conj_symmetrize(const ReducedCoeffs& b) {
    ReducedCoeffs out(*b.set);
    for (std::size_t i = 0; i < b.v.size(); ++i) {
        const Mode& m = b.set->modes[i];
        std::complex<double> ib = std::conj(m.phi.value() * b.v[std::size_t(m.tau)]);
        out.v[i] = 0.5 * (b.v[i] + ib);
    }
    return out;
}

}  // namespace oksym
