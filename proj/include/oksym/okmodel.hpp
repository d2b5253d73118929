// The diblock-copolymer energy in symmetry-reduced Fourier variables:
// the symbol P and its derivatives, the energy, the residual maps (H, F),
// and all first-derivative blocks of the reduced system.
//
// Every reduced sum here collapses a full-lattice sum onto orbit
// representatives; the test suite cross-checks each one against brute-force
// summation over the full lattice at small cutoffs.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "interval.hpp"
#include "seqspace.hpp"
#include "spacegroup.hpp"

namespace oksym {

struct ModelParams {
    double gamma = 2.5;  // bifurcation parameter of the nonlocal term
    double m = 0.0;      // fixed mean of the order parameter
    double nu = 1.05;    // weight base of the coefficient norm
    double K = 0.0;      // mode cutoff used when a finite set is needed
};

// P(y) = y/gamma^2 - 1 + 1/y and its first three derivatives.
inline double P_eval(double y, double gamma, int order = 0) {
    if (y <= 0.0) throw DomainError("P: nonpositive argument");
    switch (order) {
        case 0: return y / (gamma * gamma) - 1.0 + 1.0 / y;
        case 1: return 1.0 / (gamma * gamma) - 1.0 / (y * y);
        case 2: return 2.0 / (y * y * y);
        case 3: return -6.0 / (y * y * y * y);
        default: throw DomainError("P: derivative order out of range");
    }
}

inline Interval P_eval(const Interval& y, double gamma, int order = 0) {
    if (y.lower() <= 0.0) throw DomainError("P: argument not positive");
    Interval g2 = Interval(gamma) * Interval(gamma);
    switch (order) {
        case 0: return y / g2 - Interval(1.0) + Interval(1.0) / y;
        case 1: return Interval(1.0) / g2 - Interval(1.0) / sq(y);
        case 2: return Interval(2.0) / (sq(y) * y);
        case 3: return -(Interval(6.0) / sq(sq(y)));
        default: throw DomainError("P: derivative order out of range");
    }
}

// Threshold above which P is positive and strictly increasing.
inline double y_P(double gamma) {
    if (gamma <= 2.0) return gamma;
    double g2 = gamma * gamma;
    return 0.5 * (g2 + std::sqrt(g2 * g2 - 4.0 * g2));
}

inline Interval y_P_iv(double gamma) {
    if (gamma <= 2.0) return Interval(gamma);
    Interval g2 = Interval(gamma) * Interval(gamma);
    return Interval(0.5) * (g2 + sqrt(sq(g2) - Interval(4.0) * g2));
}

// Mean value at which the uniform state changes linear stability: the zero
// of min_y P(y) + 3 m^2, using min P = 2/gamma - 1 attained at y = gamma.
inline double m_star(double gamma) {
    if (gamma < 2.0) throw DomainError("m_star: uniform state is stable for gamma < 2");
    return std::sqrt((gamma - 2.0) / (3.0 * gamma));
}

// A critical-point candidate: positive length-scale variables and a
// zero-mean reduced coefficient vector (slot 0 stays zero; the fixed mean m
// lives in ModelParams).
struct ReducedState {
    std::vector<double> kappa;
    ReducedCoeffs b;

    ReducedState() = default;
    ReducedState(const ReducedIndexSet& rs, std::vector<double> kappa_) : kappa(std::move(kappa_)), b(rs) {}
};

inline std::vector<Interval> lift_kappa(const std::vector<double>& kappa) {
    return std::vector<Interval>(kappa.begin(), kappa.end());
}

template <class C>
C make_c(double x);
template <>
inline std::complex<double> make_c(double x) {
    return {x, 0.0};
}
template <>
inline CInterval make_c(double x) {
    return CInterval(Interval(x), Interval(0.0));
}

inline std::complex<double> real_to_c(double x, std::complex<double>) { return {x, 0.0}; }
inline CInterval real_to_c(const Interval& x, CInterval) { return CInterval(x, Interval(0.0)); }

// Expansion of m e0 + b to a full coefficient field.
template <class C>
BasicFullCoeffs<C> sigma_with_mean(const BasicReducedCoeffs<C>& b, double m) {
    BasicReducedCoeffs<C> tmp = b;
    tmp.v[0] = make_c<C>(m);
    return sigma_expand(tmp);
}

template <class C>
struct ResidualT {
    std::vector<C> H;  // one entry per length scale
    std::vector<C> F;  // one entry per nonzero stored mode, in mode order
};
using Residual = ResidualT<std::complex<double>>;
using ResidualIv = ResidualT<CInterval>;

// Dense first-derivative blocks of (H, F) with respect to (kappa, b),
// row-major. Rows/columns over b refer to the nonzero modes in mode order.
template <class C>
struct JacobianT {
    std::size_t J = 0;
    std::size_t N = 0;
    std::vector<C> DkH;  // J x J
    std::vector<C> DbH;  // J x N
    std::vector<C> DkF;  // N x J
    std::vector<C> DbF;  // N x N

    C& dkh(std::size_t j, std::size_t jp) { return DkH[j * J + jp]; }
    C& dbh(std::size_t j, std::size_t i) { return DbH[j * N + i]; }
    C& dkf(std::size_t i, std::size_t j) { return DkF[i * J + j]; }
    C& dbf(std::size_t i, std::size_t ip) { return DbF[i * N + ip]; }
    const C& dkh(std::size_t j, std::size_t jp) const { return DkH[j * J + jp]; }
    const C& dbh(std::size_t j, std::size_t i) const { return DbH[j * N + i]; }
    const C& dkf(std::size_t i, std::size_t j) const { return DkF[i * J + j]; }
    const C& dbf(std::size_t i, std::size_t ip) const { return DbF[i * N + ip]; }
};
using Jacobian = JacobianT<std::complex<double>>;
using JacobianIv = JacobianT<CInterval>;

namespace detail {

template <class S>
S delta_from_terms(const std::vector<long long>& terms, const std::vector<S>& kappa) {
    S acc{};
    for (std::size_t j = 0; j < kappa.size(); ++j) acc = acc + S(double(terms[j])) * kappa[j];
    return acc;
}

// E = 1/2 sum_{k!=0} P(Delta_k kappa) c_k c_{-k} + 1/4 <c^4>_0 + (1-2m^2)/4,
// with the quadratic sum collapsed onto orbit representatives.
template <class C, class S>
C energy_core(const ModelParams& p, const ReducedIndexSet& rs, const std::vector<S>& kappa,
              const BasicReducedCoeffs<C>& b) {
    C quad{};
    for (std::size_t i = 1; i < rs.modes.size(); ++i) {
        const Mode& mo = rs.modes[i];
        S pv = P_eval(delta_from_terms(rs.group.delta_terms(mo.k), kappa), p.gamma, 0);
        quad = quad + (S(double(mo.orbit_size)) * pv) * (b.v[i] * sigma_at_minus(b, i));
    }

    BasicFullCoeffs<C> c = sigma_with_mean(b, p.m);
    BasicFullCoeffs<C> c2 = square(c);
    C quart{};
    c2.for_each([&](const Idx& k, const C& v) { quart = quart + v * c2.at(-k); });

    return S(0.5) * quad + S(0.25) * quart + make_c<C>((1.0 - 2.0 * p.m * p.m) / 4.0);
}

template <class C, class S>
ResidualT<C> residual_core(const ModelParams& p, const ReducedIndexSet& rs,
                           const std::vector<S>& kappa, const BasicReducedCoeffs<C>& b) {
    const std::size_t J = kappa.size();
    const std::size_t N = std::size_t(rs.N);
    ResidualT<C> r;
    r.H.assign(J, C{});
    r.F.assign(N, C{});

    BasicFullCoeffs<C> c = sigma_with_mean(b, p.m);
    BasicFullCoeffs<C> c2 = square(c);

    for (std::size_t i = 1; i <= N; ++i) {
        const Mode& mo = rs.modes[i];
        std::vector<long long> terms = rs.group.delta_terms(mo.k);
        S dk = delta_from_terms(terms, kappa);
        S orb = S(double(mo.orbit_size));

        // cubic term evaluated at the representative only
        C phi{};
        c.for_each([&](const Idx& k1, const C& v) { phi = phi + c2.at(mo.k - k1) * v; });
        r.F[i - 1] = orb * (P_eval(dk, p.gamma, 0) * b.v[i] + phi);

        S pd = P_eval(dk, p.gamma, 1);
        C pair = b.v[i] * sigma_at_minus(b, i);
        for (std::size_t j = 0; j < J; ++j)
            r.H[j] = r.H[j] + S(0.5) * S(double(terms[j])) * orb * pd * pair;
    }
    return r;
}

template <class C, class S>
JacobianT<C> jacobian_core(const ModelParams& p, const ReducedIndexSet& rs,
                           const std::vector<S>& kappa, const BasicReducedCoeffs<C>& b) {
    const std::size_t J = kappa.size();
    const std::size_t N = std::size_t(rs.N);
    JacobianT<C> jac;
    jac.J = J;
    jac.N = N;
    jac.DkH.assign(J * J, C{});
    jac.DbH.assign(J * N, C{});
    jac.DkF.assign(N * J, C{});
    jac.DbF.assign(N * N, C{});

    BasicFullCoeffs<C> c = sigma_with_mean(b, p.m);
    BasicFullCoeffs<C> c2 = square(c);

    for (std::size_t i = 1; i <= N; ++i) {
        const Mode& mo = rs.modes[i];
        std::vector<long long> terms = rs.group.delta_terms(mo.k);
        S dk = delta_from_terms(terms, kappa);
        S orb = S(double(mo.orbit_size));
        S p0 = P_eval(dk, p.gamma, 0);
        S p1 = P_eval(dk, p.gamma, 1);
        S p2 = P_eval(dk, p.gamma, 2);
        C smin = sigma_at_minus(b, i);
        C pair = b.v[i] * smin;

        // rows of F: linear part on the diagonal plus the convolution block
        jac.dbf(i - 1, i - 1) = real_to_c(orb * p0, C{});
        for (std::size_t ip = 1; ip <= N; ++ip) {
            const Mode& mp = rs.modes[ip];
            C sum{};
            for (std::size_t oi = 0; oi < mp.orbit.size(); ++oi)
                sum = sum + phase_as<C>(mp.alpha_t[oi]) * c2.at(mo.k - mp.orbit[oi]);
            jac.dbf(i - 1, ip - 1) = jac.dbf(i - 1, ip - 1) + S(3.0) * orb * sum;
        }

        for (std::size_t j = 0; j < J; ++j) {
            S dj = S(double(terms[j]));
            jac.dkf(i - 1, j) = p1 * dj * orb * b.v[i];
            jac.dbh(j, i - 1) = p1 * dj * orb * smin;
            for (std::size_t jp = 0; jp < J; ++jp)
                jac.dkh(j, jp) = jac.dkh(j, jp) + S(0.5) * p2 * dj * S(double(terms[jp])) * orb * pair;
        }
    }
    return jac;
}

}  // namespace detail

inline std::complex<double> energy_c(const ModelParams& p, const ReducedIndexSet& rs,
                                     const ReducedState& st) {
    return detail::energy_core(p, rs, st.kappa, st.b);
}

inline double energy(const ModelParams& p, const ReducedIndexSet& rs, const ReducedState& st) {
    return energy_c(p, rs, st).real();
}

// Rigorous enclosure of the (real) energy of a conjugate-symmetric state.
inline Interval energy_iv(const ModelParams& p, const ReducedIndexSet& rs, const ReducedState& st) {
    return detail::energy_core(p, rs, lift_kappa(st.kappa), lift(st.b)).re;
}

inline Residual residual(const ModelParams& p, const ReducedIndexSet& rs, const ReducedState& st) {
    return detail::residual_core(p, rs, st.kappa, st.b);
}

inline ResidualIv residual_iv(const ModelParams& p, const ReducedIndexSet& rs,
                              const ReducedState& st) {
    return detail::residual_core(p, rs, lift_kappa(st.kappa), lift(st.b));
}

inline ResidualIv residual_iv(const ModelParams& p, const ReducedIndexSet& rs,
                              const std::vector<Interval>& kappa, const ReducedCoeffsIv& b) {
    return detail::residual_core(p, rs, kappa, b);
}

inline Jacobian jacobian(const ModelParams& p, const ReducedIndexSet& rs, const ReducedState& st) {
    return detail::jacobian_core(p, rs, st.kappa, st.b);
}

inline JacobianIv jacobian_iv(const ModelParams& p, const ReducedIndexSet& rs,
                              const ReducedState& st) {
    return detail::jacobian_core(p, rs, lift_kappa(st.kappa), lift(st.b));
}

inline JacobianIv jacobian_iv(const ModelParams& p, const ReducedIndexSet& rs,
                              const std::vector<Interval>& kappa, const ReducedCoeffsIv& b) {
    return detail::jacobian_core(p, rs, kappa, b);
}

}  // namespace oksym
