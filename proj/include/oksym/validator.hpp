#pragma once

// A-posteriori verification of candidate critical points. The candidate is
// recast as a fixed point of a Newton-like map whose contraction on a product
// of small balls (one radius for the length scales, one for the coefficients)
// is established through interval-evaluated bounds: residual size, defect of
// the approximate inverse, and Lipschitz control of the derivative over the
// balls. A feasible radius pair yields a certificate with a unique true
// critical point inside the ball and explicit error bars.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"
#include "okmodel.hpp"
#include "seqspace.hpp"
#include "solver.hpp"
#include "spacegroup.hpp"

namespace oksym {

// Cutoff restrictions for every tail estimate below, checked with outward
// rounding: K^2 must exceed the symbol positivity scale, 2, and both
// gamma/(1 - r1) and 1/(1 - r1).
inline void check_cutoff(double gamma, double K, double r1_star) {
    if (!(r1_star >= 0.0 && r1_star < 1.0))
        throw ConfigError("scale radius bound must lie in [0,1)");
    if (!(K > 0.0)) throw ConfigError("cutoff must be positive");
    Interval shrink = Interval(1.0) - Interval(r1_star);
    Interval lim = max(max(y_P_iv(gamma), Interval(2.0)),
                       max(Interval(gamma), Interval(1.0)) / shrink);
    if (!(sq(Interval(K)).lower() > lim.upper()))
        throw ConfigError("cutoff too small for the tail estimates");
}

// Diagonal symbol lambda_k = P(Delta_k kappa_bar) |G.k| on the given set and
// its reciprocal restricted beyond the cutoff (p.K when positive, else the
// set's own cutoff). Positivity of the tail symbol is verified with
// intervals; entries at or below the cutoff are exactly zero in the inverse.
struct TailOps {
    std::vector<Interval> lambda;      // per mode, index 0 unused
    std::vector<Interval> lambda_inv;  // zero on modes with knorm <= cutoff
};

inline TailOps tail_ops(const ModelParams& p, const std::vector<double>& kappa_bar,
                        const ReducedIndexSet& set) {
    const double K = p.K > 0.0 ? p.K : set.K;
    if (!(sq(Interval(K)).lower() > y_P_iv(p.gamma).upper()))
        throw ConfigError("cutoff must exceed the positivity scale of the symbol");
    std::vector<Interval> kb = lift_kappa(kappa_bar);
    TailOps out;
    out.lambda.assign(set.modes.size(), Interval(0.0));
    out.lambda_inv.assign(set.modes.size(), Interval(0.0));
    for (std::size_t i = 1; i < set.modes.size(); ++i) {
        const Mode& mo = set.modes[i];
        Interval pv = P_eval(detail::delta_from_terms(mo.delta, kb), p.gamma, 0);
        out.lambda[i] = pv * double(mo.orbit_size);
        if (mo.knorm <= K) continue;
        if (!(pv.lower() > 0.0)) throw ConfigError("tail symbol not verifiably positive");
        out.lambda_inv[i] = Interval(1.0) / out.lambda[i];
    }
    return out;
}

// Upper bounds on the symbol and its derivatives beyond the cutoff, uniform
// over the scale box [kb(1-r1), kb(1+r1)] where indicated:
//   C_P0: sup of 1/P at the anchor scales
//   C_P1: sup of |P'(Delta kappa)| Delta kb / P(Delta kb)
//   D_P0: sup of |P(Delta kappa)| nu^{-2 knorm}
//   D_P1: sup of |P'(Delta kappa)| (Delta kb) nu^{-2 knorm}
//   D_P2: sup of |P''(Delta kappa)| (Delta kb)^2 nu^{-2 knorm}
struct AuxConstants {
    double C_P0 = 0.0;
    double C_P1 = 0.0;
    double D_P0 = 0.0;
    double D_P1 = 0.0;
    double D_P2 = 0.0;
};

inline AuxConstants aux_tail_constants(double gamma, double K, double nu, double r1) {
    if (!(gamma > 0.0)) throw ConfigError("interface parameter must be positive");
    if (!(nu > 1.0)) throw ConfigError("decay base must exceed one");
    if (!(r1 >= 0.0 && r1 < 1.0)) throw ConfigError("scale radius bound must lie in [0,1)");
    const Interval Ksq = sq(Interval(K));
    if (!(Ksq.lower() > std::max(upper(y_P_iv(gamma)), 2.0)))
        throw ConfigError("cutoff too small for the tail constants");
    const Interval shrink = Interval(1.0) - Interval(r1);
    if (!((Ksq * shrink).lower() >= std::max(1.0, gamma)))
        throw ConfigError("cutoff too small for the shifted tail constants");

    const Interval g2 = sq(Interval(gamma));
    const Interval PK = P_eval(Ksq, gamma, 0);  // positive: Ksq is beyond the root
    AuxConstants out;
    out.C_P0 = upper(Interval(1.0) / PK);
    if (gamma <= 2.0) {
        out.C_P1 = upper(Ksq / g2 / PK);
    } else {
        Interval pp = abs(P_eval(Ksq * (Interval(1.0) + Interval(r1)), gamma, 1));
        out.C_P1 = upper(Ksq * pp / PK);
    }

    // sup over z > K of z^2 nu^{-2z}; the peak sits at 1/log(nu), so use the
    // boundary value only when K is verifiably past the peak
    const Interval lognu = log(Interval(nu));
    Interval grow;
    if (Interval(K).lower() * lognu.lower() >= 1.0)
        grow = Ksq * pow_real(Interval(nu), -(Interval(2.0) * Interval(K)));
    else
        grow = Interval(1.0) / sq(exp(Interval(1.0)) * lognu);
    Interval d1 = grow / g2;
    out.D_P1 = upper(d1);
    out.D_P0 = upper((Interval(1.0) + Interval(r1)) * d1);
    out.D_P2 = upper(Interval(2.0) / pow_int(shrink, 3) / Ksq *
                     pow_real(Interval(nu), -(Interval(2.0) * Interval(K))));
    return out;
}

// Operator norms between the two weighted spaces, as closed formulas over
// matrix entries. Domain/codomain letters: k = scale block (weights kb),
// b = coefficient block (weights omega over nonzero modes).
inline double op_norm_kk(const Eigen::MatrixXcd& Q, const std::vector<double>& kb) {
    double acc = 0.0;
    for (long j = 0; j < Q.rows(); ++j) {
        double row = 0.0;
        for (long jp = 0; jp < Q.cols(); ++jp)
            row += std::abs(Q(j, jp)) * kb[std::size_t(jp)];
        acc = std::max(acc, row / kb[std::size_t(j)]);
    }
    return acc;
}

inline double op_norm_bk(const Eigen::MatrixXcd& Q, const std::vector<double>& kb,
                         const std::vector<double>& omega) {
    double acc = 0.0;
    for (long k = 0; k < Q.cols(); ++k) {
        double col = 0.0;
        for (long j = 0; j < Q.rows(); ++j)
            col = std::max(col, std::abs(Q(j, k)) / kb[std::size_t(j)]);
        acc = std::max(acc, col / omega[std::size_t(k)]);
    }
    return acc;
}

inline double op_norm_kb(const Eigen::MatrixXcd& Q, const std::vector<double>& kb,
                         const std::vector<double>& omega) {
    const long J = Q.cols();
    if (J > 16) throw ConfigError("sign enumeration limited to 16 scale variables");
    double acc = 0.0;
    for (long bits = 0; bits < (1L << J); ++bits) {
        double s = 0.0;
        for (long k = 0; k < Q.rows(); ++k) {
            std::complex<double> row{};
            for (long j = 0; j < J; ++j) {
                double eps = (bits >> j) & 1 ? -1.0 : 1.0;
                row += Q(k, j) * (eps * kb[std::size_t(j)]);
            }
            s += omega[std::size_t(k)] * std::abs(row);
        }
        acc = std::max(acc, s);
    }
    return acc;
}

inline double op_norm_bb(const Eigen::MatrixXcd& Q, const std::vector<double>& omega) {
    double acc = 0.0;
    for (long k = 0; k < Q.cols(); ++k) {
        double col = 0.0;
        for (long kp = 0; kp < Q.rows(); ++kp)
            col += omega[std::size_t(kp)] * std::abs(Q(kp, k));
        acc = std::max(acc, col / omega[std::size_t(k)]);
    }
    return acc;
}

struct ZBounds {
    double Z11 = 0.0, Z12 = 0.0, Z21 = 0.0, Z22 = 0.0;
};

// Lipschitz coefficients W[i][ip][iq] (zero-based stores of the 1-based
// labels): block i of the image, block ip of the input direction, radius iq
// scaling the shift.
struct WBounds {
    double v[2][2][2]{};
    double at(int i, int ip, int iq) const { return v[i - 1][ip - 1][iq - 1]; }
};

namespace cert_detail {

inline bool is_zero(const CInterval& z) {
    return z.re.lower() == 0.0 && z.re.upper() == 0.0 && z.im.lower() == 0.0 &&
           z.im.upper() == 0.0;
}

// Shared scaffolding for the residual and defect bounds: the candidate's set
// extended far enough to hold every row the cubic term can reach (factor 5
// on the cutoff), a rigorous head/tail split at the cutoff, the symbol on
// all extended modes, and the squared density field of the candidate.
struct Workspace {
    const ModelParams p;
    const ReducedIndexSet& rs;
    const Eigen::MatrixXcd& A;
    ReducedCoeffs b;
    std::size_t J = 0, N = 0;

    ReducedIndexSet ext;
    std::vector<int> head_pos;  // ext mode -> rs position, -1 beyond the cutoff
    std::vector<Interval> P0;   // P(Delta_k kb) per ext mode
    FullCoeffsIv c, c2;
    double Kcut = 0.0;
    double col_limit = 0.0;  // columns with head coupling end here (~3K)

    Workspace(const ModelParams& p_, const ReducedIndexSet& rs_, const ReducedCoeffs& b_,
              const Eigen::MatrixXcd& A_)
        : p(p_), rs(rs_), A(A_), b(b_) {
        b.set = &rs;
        J = std::size_t(rs.group.J);
        N = std::size_t(rs.N);
        if (b.v.size() != rs.modes.size())
            throw ConfigError("coefficient vector does not match the set");
        if (!(b.v[0] == std::complex<double>{}))
            throw ConfigError("zero mode slot must vanish");
        if (A.rows() != long(J + N) || A.cols() != long(J + N))
            throw ConfigError("operator block size mismatch");
        Kcut = rs.K;
        check_cutoff(p.gamma, Kcut, 0.0);

        ext = build_reduced_set(rs.group, Kcut * 5.0 * (1.0 + 1e-6), rs.kappa_bar, rs.nu);
        head_pos.assign(ext.modes.size(), -1);
        std::size_t found = 0;
        for (std::size_t i = 0; i < ext.modes.size(); ++i) {
            head_pos[i] = rs.index_of(ext.modes[i].k);
            if (head_pos[i] >= 0) ++found;
        }
        if (found != rs.modes.size())
            throw ConfigError("head modes missing from the extended set");

        // rigorous separation: every non-head mode must verifiably lie
        // beyond the cutoff, and carry a positive symbol there
        std::vector<Interval> kb = lift_kappa(rs.kappa_bar);
        const Interval Ksq = sq(Interval(Kcut));
        P0.assign(ext.modes.size(), Interval(0.0));
        for (std::size_t i = 1; i < ext.modes.size(); ++i) {
            Interval d = detail::delta_from_terms(ext.modes[i].delta, kb);
            if (head_pos[i] < 0) {
                if (!(d.lower() > Ksq.upper()))
                    throw ConfigError("mode straddles the cutoff boundary");
            }
            P0[i] = P_eval(d, p.gamma, 0);
            if (head_pos[i] < 0 && !(P0[i].lower() > 0.0))
                throw ConfigError("tail symbol not verifiably positive");
        }

        col_limit = 3.0 * Kcut * (1.0 + 1e-9);
        c = sigma_with_mean(lift(b), p.m);
        c2 = square(c);
    }

    // One column of the derivative of the cubic term, without the row orbit
    // factor: value(row) = 3 sum over the column's orbit of the relative
    // phase times c2 at the offset. Rows outside the reach of the squared
    // field are exactly zero and are skipped via the norm band.
    template <class Fn>
    void phi_column(const Mode& col, Fn&& fn) const {
        const double lo = col.knorm - 2.0 * Kcut - 0.5;
        const double hi = col.knorm + 2.0 * Kcut + 0.5;
        for (std::size_t i = 1; i < ext.modes.size(); ++i) {
            const Mode& row = ext.modes[i];
            if (row.knorm < lo || row.knorm > hi) continue;
            CInterval acc{};
            for (std::size_t oi = 0; oi < col.orbit.size(); ++oi) {
                const Idx d = row.k - col.orbit[oi];
                if (!c2.in_box(d)) continue;
                CInterval v = c2.at(d);
                if (is_zero(v)) continue;
                acc += phase_as<CInterval>(col.alpha_t[oi]) * v;
            }
            if (is_zero(acc)) continue;
            fn(i, CInterval(Interval(3.0) * acc.re, Interval(3.0) * acc.im));
        }
    }

    CInterval Ae(std::size_t r, std::size_t c_) const { return lift(A(long(r), long(c_))); }
    Interval Aabs(std::size_t r, std::size_t c_) const { return Ae(r, c_).abs(); }
};

inline std::pair<double, double> bound_Y_impl(const Workspace& w) {
    const std::size_t J = w.J, N = w.N;
    ReducedState st(w.rs, w.rs.kappa_bar);
    st.b = w.b;
    ResidualIv r = residual_iv(w.p, w.rs, st);

    // head block through the approximate inverse
    Interval y1(0.0), y2(0.0);
    for (std::size_t row = 0; row < J + N; ++row) {
        CInterval acc{};
        for (std::size_t j = 0; j < J; ++j) acc += w.Ae(row, j) * r.H[j];
        for (std::size_t i = 0; i < N; ++i) acc += w.Ae(row, J + i) * r.F[i];
        if (row < J)
            y1 = max(y1, acc.abs() / Interval(w.rs.kappa_bar[row]));
        else
            y2 = y2 + acc.abs() * w.rs.modes[row - J + 1].omega_iv;
    }

    // middle shell: rows beyond the cutoff see lambda^{-1} F_k with
    // F_k = |G.k| Phi_k, so the orbit factor cancels against the weight
    for (std::size_t i = 1; i < w.ext.modes.size(); ++i) {
        if (w.head_pos[i] >= 0) continue;
        const Idx k = w.ext.modes[i].k;
        CInterval phi{};
        w.c.for_each([&](const Idx& k1, const CInterval& v) {
            if (is_zero(v)) return;
            CInterval u = w.c2.at(k - k1);
            if (is_zero(u)) return;
            phi += v * u;
        });
        if (is_zero(phi)) continue;
        y2 = y2 + phi.abs() / w.P0[i] * w.ext.modes[i].omega_iv;
    }
    return {upper(y1), upper(y2)};
}

inline ZBounds bound_Z_impl(const Workspace& w) {
    const std::size_t J = w.J, N = w.N;
    ReducedState st(w.rs, w.rs.kappa_bar);
    st.b = w.b;
    JacobianIv jac = jacobian_iv(w.p, w.rs, st);
    std::vector<Interval> kb = lift_kappa(w.rs.kappa_bar);

    // scale-input blocks: I - A11 DkH - A12 DkF and -(A21 DkH + A22 DkF)
    std::vector<CInterval> Qk((J + N) * J);
    for (std::size_t row = 0; row < J + N; ++row)
        for (std::size_t jp = 0; jp < J; ++jp) {
            CInterval acc = row == jp ? CInterval(Interval(1.0), Interval(0.0)) : CInterval{};
            for (std::size_t l = 0; l < J; ++l) acc -= w.Ae(row, l) * jac.dkh(l, jp);
            for (std::size_t i = 0; i < N; ++i) acc -= w.Ae(row, J + i) * jac.dkf(i, jp);
            Qk[row * J + jp] = acc;
        }
    Interval z11(0.0);
    for (std::size_t j = 0; j < J; ++j) {
        Interval row(0.0);
        for (std::size_t jp = 0; jp < J; ++jp) row = row + Qk[j * J + jp].abs() * kb[jp];
        z11 = max(z11, row / kb[j]);
    }
    Interval z21(0.0);
    if (J > 16) throw ConfigError("sign enumeration limited to 16 scale variables");
    for (std::size_t bits = 0; bits < (std::size_t(1) << J); ++bits) {
        Interval s(0.0);
        for (std::size_t i = 0; i < N; ++i) {
            CInterval row{};
            for (std::size_t jp = 0; jp < J; ++jp) {
                double eps = (bits >> jp) & 1 ? -1.0 : 1.0;
                row += Qk[(J + i) * J + jp] * Interval(eps * w.rs.kappa_bar[jp]);
            }
            s = s + row.abs() * w.rs.modes[i + 1].omega_iv;
        }
        z21 = max(z21, s);
    }

    // coefficient-input columns at or below the cutoff
    Interval z12(0.0), z22(0.0);
    for (std::size_t ic = 1; ic <= N; ++ic) {
        const Mode& cm = w.rs.modes[ic];
        Interval u(0.0);

        std::vector<CInterval> col(J + N);
        for (std::size_t row = 0; row < J + N; ++row) {
            CInterval acc{};
            for (std::size_t l = 0; l < J; ++l) acc += w.Ae(row, l) * jac.dbh(l, ic - 1);
            for (std::size_t i = 0; i < N; ++i) acc += w.Ae(row, J + i) * jac.dbf(i, ic - 1);
            col[row] = acc;
        }
        for (std::size_t j = 0; j < J; ++j) u = max(u, col[j].abs() / kb[j]);
        z12 = max(z12, u / cm.omega_iv);

        Interval s(0.0);
        for (std::size_t i = 1; i <= N; ++i) {
            CInterval y = -col[J + i - 1];
            if (i == ic) y += CInterval(Interval(1.0), Interval(0.0));
            s = s + y.abs() * w.rs.modes[i].omega_iv;
        }
        w.phi_column(cm, [&](std::size_t ri, const CInterval& val) {
            if (w.head_pos[ri] >= 0) return;
            s = s + val.abs() / w.P0[ri] * w.ext.modes[ri].omega_iv;
        });
        z22 = max(z22, s / cm.omega_iv);
    }

    // coefficient-input columns in the middle shell: only the cubic term
    // couples back below the cutoff, plus the diagonal tail contribution
    std::vector<CInterval> ghead(N + 1);
    for (std::size_t ec = 1; ec < w.ext.modes.size(); ++ec) {
        if (w.head_pos[ec] >= 0) continue;
        const Mode& cm = w.ext.modes[ec];
        if (cm.knorm > w.col_limit) continue;
        std::fill(ghead.begin(), ghead.end(), CInterval{});
        Interval s(0.0);
        w.phi_column(cm, [&](std::size_t ri, const CInterval& val) {
            int h = w.head_pos[ri];
            if (h >= 1)
                ghead[std::size_t(h)] = val * Interval(double(w.ext.modes[ri].orbit_size));
            else if (h < 0)
                s = s + val.abs() / w.P0[ri] * w.ext.modes[ri].omega_iv;
        });
        Interval u(0.0);
        for (std::size_t j = 0; j < J; ++j) {
            CInterval acc{};
            for (std::size_t i = 1; i <= N; ++i) acc += w.Ae(j, J + i - 1) * ghead[i];
            u = max(u, acc.abs() / kb[j]);
        }
        z12 = max(z12, u / cm.omega_iv);
        Interval sh(0.0);
        for (std::size_t i = 1; i <= N; ++i) {
            CInterval acc{};
            for (std::size_t ip = 1; ip <= N; ++ip)
                acc += w.Ae(J + i - 1, J + ip - 1) * ghead[ip];
            sh = sh + acc.abs() * w.rs.modes[i].omega_iv;
        }
        z22 = max(z22, (sh + s) / cm.omega_iv);
    }

    // columns beyond the reach of the head: diagonal part only, bounded by
    // the tail symbol constant against the norm of the squared field
    Interval cp0 = Interval(1.0) / P_eval(sq(Interval(w.Kcut)), w.p.gamma, 0);
    Interval v3 = Interval(3.0) * cp0 * norm_nu_iv(w.c2, w.rs.group, w.rs.kappa_bar, w.rs.nu);
    z22 = max(z22, v3);

    return {upper(z11), upper(z12), upper(z21), upper(z22)};
}

inline WBounds bound_W_impl(const ModelParams& p, const ReducedIndexSet& rs,
                            const ReducedCoeffs& b_in, const Eigen::MatrixXcd& A,
                            double r1_star, double r2_star) {
    if (!(r2_star > 0.0)) throw ConfigError("coefficient radius bound must be positive");
    check_cutoff(p.gamma, rs.K, r1_star);
    const AuxConstants aux = aux_tail_constants(p.gamma, rs.K, rs.nu, r1_star);

    const std::size_t J = std::size_t(rs.group.J), N = std::size_t(rs.N);
    ReducedCoeffs b = b_in;
    b.set = &rs;
    if (b.v.size() != rs.modes.size())
        throw ConfigError("coefficient vector does not match the set");
    if (A.rows() != long(J + N) || A.cols() != long(J + N))
        throw ConfigError("operator block size mismatch");
    ReducedCoeffsIv biv = lift(b);

    std::vector<Interval> kb = lift_kappa(rs.kappa_bar);
    std::vector<Interval> kbox(J);
    for (std::size_t j = 0; j < J; ++j)
        kbox[j] = kb[j] * (Interval(1.0) + Interval(-r1_star, r1_star));

    // per-mode data: symbol derivative ranges over the scale box, anchored
    // form values, coefficient and trace magnitudes, weight combinations
    std::vector<Interval> P1b(N + 1), P2b(N + 1), P3b(N + 1), dkb(N + 1), sb(N + 1),
        babs(N + 1), nuneg(N + 1), oinv2(N + 1);
    for (std::size_t i = 1; i <= N; ++i) {
        const Mode& mo = rs.modes[i];
        Interval ybox = detail::delta_from_terms(mo.delta, kbox);
        P1b[i] = abs(P_eval(ybox, p.gamma, 1));
        P2b[i] = abs(P_eval(ybox, p.gamma, 2));
        P3b[i] = abs(P_eval(ybox, p.gamma, 3));
        dkb[i] = detail::delta_from_terms(mo.delta, kb);
        sb[i] = sigma_at_minus(biv, i).abs();
        babs[i] = lift(b.v[i]).abs();
        nuneg[i] = Interval(double(mo.orbit_size)) / mo.omega_iv;
        oinv2[i] = Interval(double(mo.orbit_size)) / sq(mo.omega_iv);
    }

    // scale-block vectors of the second-difference estimates
    std::vector<Interval> R1(J, Interval(0.0)), R2(J, Interval(0.0)), U1x(J), U2x(J);
    for (std::size_t j = 0; j < J; ++j) {
        Interval r1acc(0.0), r2acc(0.0), u1head(0.0), u2head(0.0);
        for (std::size_t i = 1; i <= N; ++i) {
            Interval dj(double(rs.modes[i].delta[j]));
            r1acc = r1acc + P3b[i] * dj * sq(dkb[i]) *
                                Interval(double(rs.modes[i].orbit_size)) * babs[i] * sb[i];
            r2acc = max(r2acc, nuneg[i] * P2b[i] * dkb[i] * dj * sb[i]);
            u1head = max(u1head, P1b[i] * dj * oinv2[i]);
            u2head = max(u2head, P2b[i] * dkb[i] * dj * oinv2[i]);
        }
        R1[j] = Interval(0.5) * r1acc;
        R2[j] = r2acc;
        U1x[j] = max(u1head, Interval(aux.D_P1) / kb[j]);
        U2x[j] = Interval(0.5) * max(u2head, Interval(aux.D_P2) / kb[j]);
    }
    // coefficient-block vectors
    std::vector<Interval> Rt1(N + 1, Interval(0.0)), Rt2(N + 1, Interval(0.0));
    for (std::size_t i = 1; i <= N; ++i) {
        Rt1[i] = P2b[i] * sq(dkb[i]) * Interval(double(rs.modes[i].orbit_size)) * babs[i];
        Rt2[i] = P1b[i] * dkb[i] * nuneg[i];
    }

    auto aabs = [&](std::size_t r, std::size_t c) { return lift(A(long(r), long(c))).abs(); };
    // |A| applied blockwise to a (scale, coefficient) pair of magnitude
    // vectors, measured in the image norm of the requested block row
    auto fj_norm = [&](const std::vector<Interval>& rk, const std::vector<Interval>& rt,
                       bool with_rt) {
        Interval acc(0.0);
        for (std::size_t j = 0; j < J; ++j) {
            Interval t(0.0);
            for (std::size_t l = 0; l < J; ++l) t = t + aabs(j, l) * rk[l];
            if (with_rt)
                for (std::size_t i = 1; i <= N; ++i) t = t + aabs(j, J + i - 1) * rt[i];
            acc = max(acc, t / kb[j]);
        }
        return acc;
    };
    auto x0_norm = [&](const std::vector<Interval>& rk, const std::vector<Interval>& rt,
                       bool with_rt) {
        Interval acc(0.0);
        for (std::size_t i = 1; i <= N; ++i) {
            Interval t(0.0);
            for (std::size_t l = 0; l < J; ++l) t = t + aabs(J + i - 1, l) * rk[l];
            if (with_rt)
                for (std::size_t ip = 1; ip <= N; ++ip)
                    t = t + aabs(J + i - 1, J + ip - 1) * rt[ip];
            acc = acc + t * rs.modes[i].omega_iv;
        }
        return acc;
    };

    WBounds out;
    out.v[0][0][0] = upper(fj_norm(R1, Rt1, true));
    out.v[1][0][0] = upper(x0_norm(R1, Rt1, true));
    out.v[0][1][0] = upper(fj_norm(R2, Rt2, true));
    out.v[1][1][0] = upper(x0_norm(R2, Rt2, true) + Interval(aux.C_P1));

    std::vector<Interval> R3r(J);
    for (std::size_t j = 0; j < J; ++j) R3r[j] = R2[j] + Interval(r2_star) * U2x[j];
    out.v[0][0][1] = upper(fj_norm(R3r, Rt2, true));
    out.v[1][0][1] = upper(x0_norm(R3r, Rt2, true) + Interval(aux.C_P1));

    // cubic-term Lipschitz block: uniform product estimate times the orbit
    // weighted column norms of the coefficient blocks of |A|
    Interval prod = Interval(6.0) * (Interval(std::fabs(p.m)) + norm_X0(biv) + Interval(r2_star));
    Interval a12g(0.0), a22g(0.0);
    for (std::size_t i = 1; i <= N; ++i) {
        Interval colk(0.0), colb(0.0);
        for (std::size_t j = 0; j < J; ++j) colk = max(colk, aabs(j, J + i - 1) / kb[j]);
        for (std::size_t ip = 1; ip <= N; ++ip)
            colb = colb + rs.modes[ip].omega_iv * aabs(J + ip - 1, J + i - 1);
        a12g = max(a12g, nuneg[i] * colk);
        a22g = max(a22g, nuneg[i] * colb);
    }
    out.v[0][1][1] = upper(fj_norm(U1x, Rt1, false) + prod * a12g);
    out.v[1][1][1] =
        upper(x0_norm(U1x, Rt1, false) + prod * max(a22g, Interval(aux.C_P0)));
    return out;
}

}  // namespace cert_detail

inline std::pair<double, double> bound_Y(const ModelParams& p, const ReducedIndexSet& rs,
                                         const ReducedCoeffs& b, const Eigen::MatrixXcd& A) {
    cert_detail::Workspace w(p, rs, b, A);
    return cert_detail::bound_Y_impl(w);
}

inline ZBounds bound_Z(const ModelParams& p, const ReducedIndexSet& rs, const ReducedCoeffs& b,
                       const Eigen::MatrixXcd& A) {
    cert_detail::Workspace w(p, rs, b, A);
    return cert_detail::bound_Z_impl(w);
}

inline WBounds bound_W(const ModelParams& p, const ReducedIndexSet& rs, const ReducedCoeffs& b,
                       const Eigen::MatrixXcd& A, double r1_star, double r2_star) {
    return cert_detail::bound_W_impl(p, rs, b, A, r1_star, r2_star);
}

struct RadiiBounds {
    double Y1 = 0.0, Y2 = 0.0;
    double Z11 = 0.0, Z12 = 0.0, Z21 = 0.0, Z22 = 0.0;
    double W[2][2][2]{};
    double r1_star = 0.0, r2_star = 0.0;
};

struct PolyValues {
    double p1 = 0.0, p2 = 0.0, pt3 = 0.0, pt4 = 0.0;
};

// Upward-rounded values of the two radii polynomials and of the two spectral
// margins of the Lipschitz majorant matrix at the given radius pair. The
// strict variant drops the halving of the second-difference terms, making
// the first two values the componentwise dominance conditions.
inline PolyValues radii_polynomials(const RadiiBounds& b, double r1, double r2,
                                    bool strict_simple = false) {
    if (!(r1 >= 0.0 && r2 >= 0.0 && r1 <= b.r1_star && r2 <= b.r2_star))
        throw ConfigError("radius outside the admissible rectangle");
    const Interval R1(r1), R2(r2);
    auto lin = [&](int i, int ip) {
        return Interval(b.W[i][ip][0]) * R1 + Interval(b.W[i][ip][1]) * R2;
    };
    const Interval M11 = Interval(b.Z11) + lin(0, 0), M12 = Interval(b.Z12) + lin(0, 1);
    const Interval M21 = Interval(b.Z21) + lin(1, 0), M22 = Interval(b.Z22) + lin(1, 1);
    const Interval half = strict_simple ? Interval(1.0) : Interval(0.5);
    Interval p1 = Interval(b.Y1) + R1 * (Interval(b.Z11) + half * lin(0, 0) - Interval(1.0)) +
                  R2 * (Interval(b.Z12) + half * lin(0, 1));
    Interval p2 = Interval(b.Y2) + R1 * (Interval(b.Z21) + half * lin(1, 0)) +
                  R2 * (Interval(b.Z22) + half * lin(1, 1) - Interval(1.0));
    Interval tr = M11 + M22;
    Interval det = M11 * M22 - M12 * M21;
    return {upper(p1), upper(p2), upper(tr - Interval(2.0)),
            upper(tr - det - Interval(1.0))};
}

struct RhatResult {
    double r1 = 0.0, r2 = 0.0;
    bool success = false;
    PolyValues polys{};
};

// Searches the admissible rectangle for a radius pair with all four values
// negative: an ascending logarithmic sweep finds the first feasible pair,
// then componentwise bisection shrinks it toward the minimal corner (small
// radii fail too, since the residual terms dominate there).
inline RhatResult find_r_hat(const RadiiBounds& b, bool strict_simple = false) {
    if (!(b.r1_star > 0.0 && b.r2_star > 0.0)) return {};
    auto eval = [&](double r1, double r2) { return radii_polynomials(b, r1, r2, strict_simple); };
    auto feasible = [&](double r1, double r2) {
        PolyValues q = eval(r1, r2);
        return q.p1 < 0.0 && q.p2 < 0.0 && q.pt3 < 0.0 && q.pt4 < 0.0;
    };
    const int T = 57;  // factors 10^{-t/4} down past 1e-14
    for (int t2 = T - 1; t2 >= 0; --t2) {
        const double r2 = b.r2_star * std::pow(10.0, -double(t2) / 4.0);
        for (int t1 = T - 1; t1 >= 0; --t1) {
            const double r1 = b.r1_star * std::pow(10.0, -double(t1) / 4.0);
            if (!feasible(r1, r2)) continue;
            double r1h = r1, r2h = r2;
            auto shrink = [&](double& rc, bool first) {
                double lo = 0.0, hi = rc;
                for (int it = 0; it < 40; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (!(mid > 0.0)) break;
                    bool ok = first ? feasible(mid, r2h) : feasible(r1h, mid);
                    (ok ? hi : lo) = mid;
                }
                rc = hi;
            };
            shrink(r2h, false);
            shrink(r1h, true);
            shrink(r2h, false);
            return {r1h, r2h, true, eval(r1h, r2h)};
        }
    }
    return {};
}

// Conjugation operator as a dense matrix on the (scale, coefficient) blocks.
inline Eigen::MatrixXcd conj_op(const ReducedIndexSet& rs) {
    const long J = rs.group.J, n = J + rs.N;
    Eigen::MatrixXcd I = Eigen::MatrixXcd::Zero(n, n);
    for (long j = 0; j < J; ++j) I(j, j) = 1.0;
    for (int i = 1; i <= rs.N; ++i)
        I(J + i - 1, J + rs.modes[std::size_t(i)].tau - 1) =
            rs.modes[std::size_t(i)].phi.value();
    return I;
}

enum class CertStatus { proved, failed };

struct Certificate {
    std::string group_id;
    ModelParams params;  // gamma, m, nu; K mirrors the proving set's cutoff
    std::vector<double> kappa_bar;
    std::vector<std::complex<double>> b;  // mode coefficients, zero slot first
    RadiiBounds bounds{};
    double r_hat1 = 0.0, r_hat2 = 0.0;
    PolyValues polys{};  // at r_hat when proved, at r_star otherwise
    double rho1 = 0.0, rho2 = 0.0;  // Perron weights of the majorant at r_hat
    bool strict_simple = false;
    CertStatus status = CertStatus::failed;
    std::string reason;  // empty when proved
};

struct ProveOptions {
    double r1_star = 1e-4;
    double r2_star = 0.0;  // 0: picked as factor x numerical residual norm
    double r2_star_factor = 100.0;
    bool strict_simple = false;
};

// Full proof attempt for one candidate. Precondition failures and validity
// errors are returned as a failed certificate with the reason recorded, so
// the caller can always serialize the outcome.
inline Certificate prove(const ModelParams& p, const ReducedIndexSet& rs, const ReducedState& st,
                         const ProveOptions& opt = {}) {
    Certificate cert;
    cert.group_id = rs.group.id;
    cert.params = p;
    cert.params.K = rs.K;
    cert.kappa_bar = rs.kappa_bar;
    cert.b = st.b.v;
    cert.strict_simple = opt.strict_simple;
    auto fail = [&](const std::string& why) {
        cert.status = CertStatus::failed;
        cert.reason = why;
        return cert;
    };

    if (st.b.v.size() != rs.modes.size())
        return fail("coefficient vector does not match the set");
    if (st.kappa.size() != std::size_t(rs.group.J))
        return fail("scale vector has wrong length");
    for (std::size_t j = 0; j < st.kappa.size(); ++j) {
        if (!(rs.kappa_bar[j] > 0.0)) return fail("anchor scales must be positive");
        if (!(std::fabs(st.kappa[j] - rs.kappa_bar[j]) <= 1e-9 * rs.kappa_bar[j]))
            return fail("candidate scales are not anchored to the set");
    }
    if (st.b.v[0] != std::complex<double>{}) return fail("zero mode slot must vanish");
    for (std::size_t i = 1; i < rs.modes.size(); ++i) {
        const Mode& mo = rs.modes[i];
        std::complex<double> mirror = std::conj(mo.phi.value() * st.b.v[std::size_t(mo.tau)]);
        if (st.b.v[i] != mirror) return fail("coefficients are not conjugate symmetric");
    }
    if (!(opt.r1_star > 0.0 && opt.r1_star < 1.0))
        return fail("scale radius bound must lie in (0,1)");

    // the proof is anchored at the set's scales; the candidate may sit a
    // hair off them after refinement and the residual bound absorbs that
    ReducedState anchored(rs, rs.kappa_bar);
    anchored.b = st.b;
    anchored.b.set = &rs;

    const double resid = residual_norm(rs, residual(p, rs, anchored));

    try {
        check_cutoff(p.gamma, rs.K, opt.r1_star);
        Eigen::MatrixXcd M = assemble(jacobian(p, rs, anchored));
        Eigen::MatrixXcd A = build_A(M, rs);
        Eigen::MatrixXcd I = conj_op(rs);
        if ((A - A.adjoint()).cwiseAbs().maxCoeff() != 0.0)
            return fail("approximate inverse is not selfadjoint");
        if ((A - I.conjugate() * A.conjugate() * I).cwiseAbs().maxCoeff() != 0.0)
            return fail("approximate inverse does not commute with the conjugation");

        cert_detail::Workspace w(p, rs, anchored.b, A);
        auto [y1, y2] = cert_detail::bound_Y_impl(w);
        // the search rectangle must contain the contraction regime; the head
        // residual alone undercounts the truncation flux carried by Y2
        const double r2s = opt.r2_star > 0.0
                               ? opt.r2_star
                               : std::max({opt.r2_star_factor * resid,
                                           opt.r2_star_factor * y2, 1e-10});
        ZBounds z = cert_detail::bound_Z_impl(w);
        WBounds wb = cert_detail::bound_W_impl(p, rs, anchored.b, A, opt.r1_star, r2s);
        cert.bounds.Y1 = y1;
        cert.bounds.Y2 = y2;
        cert.bounds.Z11 = z.Z11;
        cert.bounds.Z12 = z.Z12;
        cert.bounds.Z21 = z.Z21;
        cert.bounds.Z22 = z.Z22;
        for (int i = 0; i < 2; ++i)
            for (int ip = 0; ip < 2; ++ip)
                for (int iq = 0; iq < 2; ++iq) cert.bounds.W[i][ip][iq] = wb.v[i][ip][iq];
        cert.bounds.r1_star = opt.r1_star;
        cert.bounds.r2_star = r2s;
    } catch (const ConfigError& e) {
        return fail(e.what());
    } catch (const SingularError& e) {
        return fail(e.what());
    } catch (const DomainError& e) {
        return fail(e.what());
    }

    RhatResult rr = find_r_hat(cert.bounds, opt.strict_simple);
    if (!rr.success) {
        cert.polys = radii_polynomials(cert.bounds, cert.bounds.r1_star, cert.bounds.r2_star,
                                       opt.strict_simple);
        return fail("no radius pair makes all four polynomial values negative");
    }
    cert.r_hat1 = rr.r1;
    cert.r_hat2 = rr.r2;
    cert.polys = rr.polys;

    // Perron weights of the majorant at r_hat, for reporting
    auto lin = [&](int i, int ip) {
        return cert.bounds.W[i][ip][0] * rr.r1 + cert.bounds.W[i][ip][1] * rr.r2;
    };
    const double m11 = cert.bounds.Z11 + lin(0, 0), m12 = cert.bounds.Z12 + lin(0, 1);
    const double m21 = cert.bounds.Z21 + lin(1, 0), m22 = cert.bounds.Z22 + lin(1, 1);
    const double tr = m11 + m22;
    const double disc = std::sqrt(std::max(tr * tr - 4.0 * (m11 * m22 - m12 * m21), 0.0));
    const double sigma = 0.5 * (tr + disc);
    double rho1 = 1.0, rho2 = 1.0;
    if (m12 > 0.0) {
        rho1 = m12;
        rho2 = sigma - m11;
    } else if (m21 > 0.0) {
        rho1 = sigma - m22;
        rho2 = m21;
    }
    if (!(rho1 > 0.0) || !(rho2 > 0.0)) rho1 = rho2 = 1.0;
    const double rsum = rho1 + rho2;
    cert.rho1 = rho1 / rsum;
    cert.rho2 = rho2 / rsum;
    cert.status = CertStatus::proved;
    return cert;
}

}  // namespace oksym
