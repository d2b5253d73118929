// Non-rigorous numerics: descent to candidate critical points on the
// conjugate-symmetric subspace, Newton refinement of the reduced system,
// the symmetrized approximate inverse, and arclength continuation.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "okmodel.hpp"

namespace oksym {

using Cxd = std::complex<double>;

struct MinimizeOptions {
    double grad_tol = 1e-7;      // descent stops when the chart gradient is below this
    double newton_switch = 1e-4; // first Newton attempt once the gradient is below this
    int max_iter = 20000;
    double perturb = 0.1;        // scale of the random start when no state is given
    std::uint64_t seed = 1;
    double newton_tol = 1e-12;
    int newton_max = 60;
    double kappa_floor = 1e-6;
};

struct Candidate {
    std::string group_id;
    ModelParams params;
    ReducedState state;
    double residual_norm = 0.0;
    double energy = 0.0;
};

// Coordinates on the conjugate-symmetric slice: kappa first, then one real
// degree of freedom for each self-paired mode (a ray in the complex plane)
// and two for each lead of a partnered pair. Partner coefficients are
// reconstructed, never stored.
struct RealChart {
    const ReducedIndexSet* set = nullptr;
    struct Entry {
        std::size_t mode = 0;   // index into set->modes, always >= 1
        bool self = false;
        Cxd u{1.0, 0.0};        // ray direction for self-paired modes
        Cxd phi{1.0, 0.0};      // phase linking the partner coefficient
    };
    std::vector<Entry> entries;
    std::size_t kdim = 0;  // number of kappa coordinates
    std::size_t dim = 0;   // total real dimension

    explicit RealChart(const ReducedIndexSet& rs) : set(&rs) {
        kdim = std::size_t(rs.group.J);
        dim = kdim;
        for (std::size_t i = 1; i < rs.modes.size(); ++i) {
            const Mode& m = rs.modes[i];
            if (std::size_t(m.tau) < i) continue;  // partner of an earlier lead
            Entry e;
            e.mode = i;
            e.phi = m.phi.value();
            if (std::size_t(m.tau) == i) {
                e.self = true;
                Rat t = m.phi.turns();
                e.u = PhaseAngle(Rat(-t.p, 2 * t.q)).value();
                dim += 1;
            } else {
                dim += 2;
            }
            entries.push_back(e);
        }
    }

    std::vector<double> pack(const ReducedState& st) const {
        std::vector<double> x(dim);
        for (std::size_t j = 0; j < kdim; ++j) x[j] = st.kappa[j];
        std::size_t p = kdim;
        for (const Entry& e : entries) {
            Cxd z = st.b[e.mode];
            if (e.self) {
                x[p++] = (z * std::conj(e.u)).real();
            } else {
                x[p++] = z.real();
                x[p++] = z.imag();
            }
        }
        return x;
    }

    ReducedState unpack(const std::vector<double>& x) const {
        ReducedState st(*set, std::vector<double>(x.begin(), x.begin() + long(kdim)));
        std::size_t p = kdim;
        for (const Entry& e : entries) {
            Cxd z;
            if (e.self) {
                z = x[p++] * e.u;
            } else {
                double re = x[p++], im = x[p++];
                z = Cxd(re, im);
            }
            st.b[e.mode] = z;
            std::size_t partner = std::size_t(set->modes[e.mode].tau);
            if (partner != e.mode) st.b[partner] = std::conj(e.phi * z);
        }
        return st;
    }

    // complex direction of each chart coordinate on each mode it moves
    struct Moving {
        std::size_t mode;
        Cxd w;
    };
    std::vector<std::vector<Moving>> coordinate_directions() const {
        std::vector<std::vector<Moving>> dirs;
        dirs.reserve(dim - kdim);
        for (const Entry& e : entries) {
            std::size_t partner = std::size_t(set->modes[e.mode].tau);
            if (e.self) {
                dirs.push_back({{e.mode, e.u}});
            } else {
                dirs.push_back({{e.mode, Cxd(1.0, 0.0)}, {partner, std::conj(e.phi)}});
                dirs.push_back({{e.mode, Cxd(0.0, 1.0)}, {partner, Cxd(0.0, -1.0) * std::conj(e.phi)}});
            }
        }
        return dirs;
    }

    // gradient of the (real) energy in chart coordinates, from the residual
    std::vector<double> gradient(const Residual& r) const {
        std::vector<double> g(dim);
        for (std::size_t j = 0; j < kdim; ++j) g[j] = r.H[j].real();
        auto if_at = [&](std::size_t i) {  // (I F)_i = phi_i F_{tau(i)}
            const Mode& m = set->modes[i];
            return m.phi.value() * r.F[std::size_t(m.tau) - 1];
        };
        std::size_t p = kdim;
        for (const auto& dir : coordinate_directions()) {
            Cxd acc{};
            for (const Moving& mv : dir) acc += if_at(mv.mode) * mv.w;
            g[p++] = acc.real();
        }
        return g;
    }

    // real Hessian of the energy in chart coordinates
    Eigen::MatrixXd hessian(const Jacobian& jac) const {
        const std::size_t J = kdim;
        auto dirs = coordinate_directions();
        const long d = long(dim);
        Eigen::MatrixXd h(d, d);
        auto idf = [&](std::size_t i, std::size_t ip) {  // (I DbF)_{i,ip}
            const Mode& m = set->modes[i];
            return m.phi.value() * jac.dbf(std::size_t(m.tau) - 1, ip - 1);
        };
        auto idkf = [&](std::size_t i, std::size_t j) {  // (I DkF)_{i,j}
            const Mode& m = set->modes[i];
            return m.phi.value() * jac.dkf(std::size_t(m.tau) - 1, j);
        };
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t jp = 0; jp < J; ++jp) h(long(j), long(jp)) = jac.dkh(j, jp).real();
        for (std::size_t a = 0; a < dirs.size(); ++a) {
            for (std::size_t j = 0; j < J; ++j) {
                Cxd hk{};
                Cxd kh{};
                for (const Moving& mv : dirs[a]) {
                    hk += jac.dbh(j, mv.mode - 1) * mv.w;
                    kh += idkf(mv.mode, j) * mv.w;
                }
                h(long(j), long(J + a)) = hk.real();
                h(long(J + a), long(j)) = kh.real();
            }
            for (std::size_t bcoord = 0; bcoord < dirs.size(); ++bcoord) {
                Cxd acc{};
                for (const Moving& mi : dirs[a])
                    for (const Moving& mip : dirs[bcoord]) acc += idf(mi.mode, mip.mode) * mi.w * mip.w;
                h(long(J + a), long(J + bcoord)) = acc.real();
            }
        }
        return 0.5 * (h + h.transpose());
    }
};

// stopping metric for the reduced system: kappa part in the relative max
// norm, Fourier part in the weighted l1 norm
inline double residual_norm(const ReducedIndexSet& rs, const Residual& r) {
    double nh = 0.0;
    for (std::size_t j = 0; j < r.H.size(); ++j)
        nh = std::max(nh, std::abs(r.H[j]) / rs.kappa_bar[j]);
    double nf = 0.0;
    for (std::size_t i = 0; i < r.F.size(); ++i) nf += std::abs(r.F[i]) * rs.modes[i + 1].omega;
    return std::max(nh, nf);
}

inline Eigen::MatrixXcd assemble(const Jacobian& jac) {
    const long J = long(jac.J), N = long(jac.N);
    Eigen::MatrixXcd M(J + N, J + N);
    for (long j = 0; j < J; ++j) {
        for (long jp = 0; jp < J; ++jp) M(j, jp) = jac.dkh(std::size_t(j), std::size_t(jp));
        for (long i = 0; i < N; ++i) M(j, J + i) = jac.dbh(std::size_t(j), std::size_t(i));
    }
    for (long i = 0; i < N; ++i) {
        for (long jp = 0; jp < J; ++jp) M(J + i, jp) = jac.dkf(std::size_t(i), std::size_t(jp));
        for (long ip = 0; ip < N; ++ip) M(J + i, J + ip) = jac.dbf(std::size_t(i), std::size_t(ip));
    }
    return M;
}

inline Eigen::VectorXcd residual_vector(const Residual& r) {
    Eigen::VectorXcd v(long(r.H.size() + r.F.size()));
    for (std::size_t j = 0; j < r.H.size(); ++j) v(long(j)) = r.H[j];
    for (std::size_t i = 0; i < r.F.size(); ++i) v(long(r.H.size() + i)) = r.F[i];
    return v;
}

// Numerical inverse of the truncated Jacobian, symmetrized so that it is
// exactly selfadjoint and exactly commutes with the conjugation operator.
// Both symmetrizations are bit-idempotent whenever the conjugation phases
// are quarter turns, which covers every shipped symmetry class.
inline Eigen::MatrixXcd build_A(const Eigen::MatrixXcd& M, const ReducedIndexSet& rs) {
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
    if (!lu.isInvertible()) throw SingularError("approximate inverse: Jacobian not invertible");
    Eigen::MatrixXcd A = lu.inverse();

    const long J = long(rs.group.J);
    const long n = A.rows();

    // selfadjoint part (exact involution: transpose + conjugate)
    Eigen::MatrixXcd H = 0.5 * (A + A.adjoint());
    A = H;

    // conjugation symmetrization via the mirror map on indices
    auto mirror = [&](long r) -> long {
        if (r < J) return r;
        return J + long(rs.modes[std::size_t(r - J + 1)].tau) - 1;
    };
    auto turns = [&](long r) -> Rat {
        if (r < J) return Rat(0);
        return rs.modes[std::size_t(r - J + 1)].phi.turns();
    };
    std::vector<bool> visited(std::size_t(n * n), false);
    for (long r = 0; r < n; ++r)
        for (long c = 0; c < n; ++c) {
            if (visited[std::size_t(r * n + c)]) continue;
            long mr = mirror(r), mc = mirror(c);
            visited[std::size_t(r * n + c)] = true;
            visited[std::size_t(mr * n + mc)] = true;
            Cxd w = PhaseAngle(turns(c) - turns(r)).value();
            Cxd u = 0.5 * (A(r, c) + w * std::conj(A(mr, mc)));
            A(r, c) = u;
            if (mr != r || mc != c) A(mr, mc) = w * std::conj(u);
        }
    return A;
}

namespace detail {

inline ReducedState symmetrized(const ReducedIndexSet& rs, ReducedState st) {
    (void)rs;
    st.b = conj_symmetrize(st.b);
    return st;
}

}  // namespace detail

// Newton iteration on the reduced square system; keeps the iterates on the
// conjugate-symmetric slice and the scales positive. When a trace vector is
// given it receives the residual norm of every visited iterate.
inline Candidate newton_refine(const ModelParams& p, const ReducedIndexSet& rs, ReducedState st,
                               const MinimizeOptions& opt = {},
                               std::vector<double>* residual_trace = nullptr) {
    st = detail::symmetrized(rs, st);
    const std::size_t J = st.kappa.size();
    double rn = 0.0;
    for (int it = 0; it <= opt.newton_max; ++it) {
        Residual r = residual(p, rs, st);
        rn = residual_norm(rs, r);
        if (residual_trace) residual_trace->push_back(rn);
        if (rn < opt.newton_tol) break;
        if (it == opt.newton_max)
            throw ConvergenceError("newton: no convergence after iteration budget");
        Eigen::MatrixXcd M = assemble(jacobian(p, rs, st));
        Eigen::VectorXcd rhs = -residual_vector(r);
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
        Eigen::VectorXcd delta = lu.solve(rhs);
        if (!delta.allFinite() || (M * delta - rhs).norm() > 1e-8 * (1.0 + rhs.norm()))
            throw SingularError("newton: linear solve unreliable");
        for (std::size_t j = 0; j < J; ++j) {
            st.kappa[j] += delta(long(j)).real();
            if (!(st.kappa[j] > opt.kappa_floor))
                throw ConvergenceError("newton: scale variable left the positive cone");
        }
        for (int i = 1; i <= rs.N; ++i) st.b[std::size_t(i)] += delta(long(J) + i - 1);
        st = detail::symmetrized(rs, st);
    }
    Candidate cand;
    cand.group_id = rs.group.id;
    cand.params = p;
    cand.state = std::move(st);
    cand.residual_norm = rn;
    cand.energy = energy(p, rs, cand.state);
    return cand;
}

// Scale initialization: put the first stored shell at the minimizer of P.
inline std::vector<double> initial_kappa(const SpaceGroup& g, double gamma) {
    std::vector<double> ones(std::size_t(g.J), 1.0);
    double best = 0.0;
    for (int x = -4; x <= 4; ++x)
        for (int y = -4; y <= 4; ++y)
            for (int z = -4; z <= 4; ++z) {
                Idx k{x, y, z};
                if (k == Idx{0, 0, 0} || !g.in_active_sublattice(k)) continue;
                if (canonical_rep(g, k) != k || !is_symmetric_index(g, k)) continue;
                double d = g.delta(k, ones);
                if (best == 0.0 || d < best) best = d;
            }
    if (best == 0.0) throw InvalidGroup("no stored modes near the origin");
    std::vector<double> kappa(std::size_t(g.J), gamma / best);
    return kappa;
}

// Energy descent on the chart (Barzilai-Borwein steps with a backtracking
// line search), followed by Newton refinement. When a trace vector is given
// it receives the energy of every accepted descent iterate.
inline Candidate minimize(const ModelParams& p, const ReducedIndexSet& rs,
                          std::optional<ReducedState> init, const MinimizeOptions& opt = {},
                          std::vector<double>* energy_trace = nullptr) {
    RealChart chart(rs);
    ReducedState st = init ? detail::symmetrized(rs, *init)
                           : ReducedState(rs, std::vector<double>(rs.kappa_bar));
    if (!init && opt.perturb > 0.0) {
        std::mt19937_64 rng(opt.seed);
        std::uniform_real_distribution<double> u(-opt.perturb, opt.perturb);
        for (int i = 1; i <= rs.N; ++i) st.b[std::size_t(i)] = Cxd(u(rng), u(rng));
        st = detail::symmetrized(rs, st);
    }

    std::vector<double> x = chart.pack(st);
    auto state_of = [&](const std::vector<double>& xv) { return chart.unpack(xv); };
    auto feasible = [&](const std::vector<double>& xv) {
        for (std::size_t j = 0; j < chart.kdim; ++j)
            if (!(xv[j] > opt.kappa_floor)) return false;
        return true;
    };
    auto grad_of = [&](const ReducedState& s) { return chart.gradient(residual(p, rs, s)); };

    double E = energy(p, rs, st);
    if (energy_trace) energy_trace->push_back(E);
    std::vector<double> g = grad_of(st);
    auto norm2 = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double a : v) s += a * a;
        return s;
    };
    auto norm_inf = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double a : v) s = std::max(s, std::fabs(a));
        return s;
    };

    double step = 1e-2;
    double switch_at = opt.newton_switch;
    std::vector<double> x_prev, g_prev;
    auto snap_trivial = [&]() {
        // descent on the trivial plateau: the zero state is a critical point
        // for every scale, so hand Newton the exact zero instead of dust
        double bmax = 0.0;
        for (int i = 1; i <= rs.N; ++i) bmax = std::max(bmax, std::abs(st.b[std::size_t(i)]));
        if (bmax < 1e-7)
            for (int i = 1; i <= rs.N; ++i) st.b[std::size_t(i)] = Cxd{};
    };
    for (int it = 0; it < opt.max_iter && norm_inf(g) >= opt.grad_tol; ++it) {
        if (norm_inf(g) < switch_at) {
            try {
                snap_trivial();
                return newton_refine(p, rs, st, opt);
            } catch (const ConvergenceError&) {
            } catch (const SingularError&) {
            }
            switch_at *= 1e-2;  // not in the Newton basin yet, keep descending
        }
        double gg = norm2(g);
        double s = step;
        std::vector<double> x_try(x.size());
        double E_try = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t a = 0; a < x.size(); ++a) x_try[a] = x[a] - s * g[a];
            if (feasible(x_try)) {
                ReducedState st_try = state_of(x_try);
                E_try = energy(p, rs, st_try);
                if (E_try <= E - 1e-4 * s * gg) {
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if (!accepted) {
            if (norm_inf(g) < 1e2 * opt.grad_tol) break;  // flat enough for Newton
            throw ConvergenceError("minimize: line search failed");
        }
        x_prev = x;
        g_prev = g;
        x = x_try;
        st = state_of(x);
        E = E_try;
        if (energy_trace) energy_trace->push_back(E);
        g = grad_of(st);
        // Barzilai-Borwein step for the next iteration
        double sy = 0.0, yy = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) {
            double sv = x[a] - x_prev[a], yv = g[a] - g_prev[a];
            sy += sv * yv;
            yy += yv * yv;
        }
        step = (sy > 0.0 && yy > 0.0) ? std::min(std::max(sy / yy, 1e-10), 1e3) : 1e-2;
    }

    snap_trivial();
    return newton_refine(p, rs, st, opt);
}

// Rebuild the stored-mode set with the weights anchored at the state's own
// scales, carrying coefficients over by exact index match. Modes that fall
// outside the fresh set are dropped; the largest dropped modulus is
// reported so callers can reject a lossy rebase. The state references the
// bundled set: rebind state.b.set after moving the fields apart.
struct Rebased {
    ReducedIndexSet set;
    ReducedState state;
    double max_dropped = 0.0;
};

inline Rebased rebase(const ReducedIndexSet& rs, const ReducedState& st, double K, double nu) {
    Rebased out{build_reduced_set(rs.group, K, st.kappa, nu), {}, 0.0};
    out.state = ReducedState(out.set, st.kappa);
    for (int i = 1; i <= rs.N; ++i) {
        int ni = out.set.index_of(rs.modes[std::size_t(i)].k);
        if (ni > 0)
            out.state.b[std::size_t(ni)] = st.b[std::size_t(i)];
        else
            out.max_dropped = std::max(out.max_dropped, std::abs(st.b[std::size_t(i)]));
    }
    return out;
}

// Re-anchor and re-refine until the weight scales agree with the refined
// scales; proofs require the index set to be built at the candidate itself.
// Replaces rs with the re-anchored set; the returned state references it.
inline Candidate finalize_candidate(const ModelParams& p, ReducedIndexSet& rs,
                                    const ReducedState& st0, double K,
                                    const MinimizeOptions& opt = {}) {
    ReducedState st = st0;
    st.b.set = &rs;
    for (int round = 0; round < 8; ++round) {
        Candidate cand = newton_refine(p, rs, st, opt);
        double drift = 0.0;
        for (std::size_t j = 0; j < cand.state.kappa.size(); ++j)
            drift = std::max(drift,
                             std::fabs(cand.state.kappa[j] - rs.kappa_bar[j]) / rs.kappa_bar[j]);
        if (drift < 1e-12) return cand;
        Rebased rebuilt = rebase(rs, cand.state, K, p.nu);
        if (rebuilt.max_dropped > 1e-6)
            throw ConvergenceError("finalize: rebase dropped a significant coefficient");
        rs = std::move(rebuilt.set);
        st = std::move(rebuilt.state);
        st.b.set = &rs;
    }
    throw ConvergenceError("finalize: scale anchoring did not settle");
}

enum class BranchEnd { range_complete, step_underflow, max_steps };

struct ContinuationOptions {
    double target = 0.0;
    double ds = 0.02;
    double ds_min = 1e-7;
    double ds_max = 0.08;
    int max_steps = 400;
    int corrector_max = 8;
    double tol = 1e-11;
};

struct Branch {
    std::vector<Candidate> points;
    BranchEnd end = BranchEnd::range_complete;
};

// snapshot of a predictor tangent and the weights it was normalized with
struct TangentRecord {
    std::vector<double> tangent;
    std::vector<double> weights;
};

// Continuation parameter: the mean, the bifurcation parameter, or the
// bifurcation parameter with the mean tied to half the stability threshold.
enum class ContParam { mean, gamma, gamma_on_curve };

namespace detail {

inline ModelParams with_param(ModelParams p, ContParam which, double mu) {
    switch (which) {
        case ContParam::mean: p.m = mu; break;
        case ContParam::gamma: p.gamma = mu; break;
        case ContParam::gamma_on_curve:
            p.gamma = mu;
            p.m = 0.5 * m_star(mu);
            break;
    }
    return p;
}

inline double param_of(const ModelParams& p, ContParam which) {
    return which == ContParam::mean ? p.m : p.gamma;
}

}  // namespace detail

// Pseudo-arclength continuation of a refined candidate. The predictor
// tangent is normalized in the weighted product norm (kappa components
// relative to the current scales, coefficient chart components and the
// parameter with unit weight).
inline Branch continue_branch(const ModelParams& params0, const ReducedIndexSet& rs0,
                              const Candidate& start, ContParam which,
                              const ContinuationOptions& opt,
                              std::vector<TangentRecord>* tangent_trace = nullptr) {
    Branch out;
    ReducedIndexSet rs = rs0;
    RealChart chart(rs);
    ReducedState st = start.state;
    double mu = detail::param_of(start.params, which);
    const double mu0 = mu;
    const bool forward = opt.target > mu0;

    auto grad_at = [&](const RealChart& ch, const std::vector<double>& x, double muv) {
        ModelParams p = detail::with_param(params0, which, muv);
        return ch.gradient(residual(p, rs, ch.unpack(x)));
    };

    std::vector<double> x = chart.pack(st);
    std::vector<double> weights;  // product-norm weights per extended coordinate
    auto rebuild_weights = [&]() {
        weights.assign(chart.dim + 1, 1.0);
        for (std::size_t j = 0; j < chart.kdim; ++j) weights[j] = 1.0 / std::max(x[j], 1e-8);
    };
    rebuild_weights();

    auto wnorm = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t a = 0; a < v.size(); ++a) s += (weights[a] * v[a]) * (weights[a] * v[a]);
        return std::sqrt(s);
    };

    // initial tangent: solve H dx = -dg/dmu, direction toward the target
    auto initial_tangent = [&]() {
        ModelParams p = detail::with_param(params0, which, mu);
        Eigen::MatrixXd H = chart.hessian(jacobian(p, rs, chart.unpack(x)));
        double h = 1e-6 * std::max(1.0, std::fabs(mu));
        std::vector<double> gp = grad_at(chart, x, mu + h), gm = grad_at(chart, x, mu - h);
        Eigen::VectorXd dgdmu(long(chart.dim));
        for (std::size_t a = 0; a < chart.dim; ++a) dgdmu(long(a)) = (gp[a] - gm[a]) / (2.0 * h);
        Eigen::VectorXd dx = H.fullPivLu().solve(-dgdmu);
        std::vector<double> t(chart.dim + 1);
        for (std::size_t a = 0; a < chart.dim; ++a) t[a] = dx(long(a));
        t[chart.dim] = 1.0;
        double n = wnorm(t);
        for (double& v : t) v /= n;
        if ((forward && t[chart.dim] < 0.0) || (!forward && t[chart.dim] > 0.0))
            for (double& v : t) v = -v;
        return t;
    };

    std::vector<double> tangent;
    try {
        tangent = initial_tangent();
    } catch (const std::exception&) {
        throw BranchEndError("continuation: no tangent at the start point");
    }
    if (tangent_trace) tangent_trace->push_back({tangent, weights});

    double ds = opt.ds;
    std::vector<double> x_prevpt = x;
    double mu_prevpt = mu;
    int produced = 0;

    while (true) {
        if (produced >= opt.max_steps) {
            out.end = BranchEnd::max_steps;
            return out;
        }
        // predictor
        std::vector<double> xp(chart.dim);
        for (std::size_t a = 0; a < chart.dim; ++a) xp[a] = x[a] + ds * tangent[a];
        double mup = mu + ds * tangent[chart.dim];

        // corrector: Newton on [gradient; arclength constraint]
        auto feasible = [&](const std::vector<double>& xv) {
            for (std::size_t j = 0; j < chart.kdim; ++j)
                if (!(xv[j] > 1e-8)) return false;
            return true;
        };
        bool ok = feasible(xp);
        std::vector<double> xc = xp;
        double muc = mup;
        for (int it = 0; ok; ++it) {
            std::vector<double> gc = grad_at(chart, xc, muc);
            double cons = 0.0;
            for (std::size_t a = 0; a < chart.dim; ++a)
                cons += weights[a] * weights[a] * (xc[a] - xp[a]) * tangent[a];
            cons += weights[chart.dim] * weights[chart.dim] * (muc - mup) * tangent[chart.dim];
            double rmax = std::fabs(cons);
            for (double v : gc) rmax = std::max(rmax, std::fabs(v));
            if (rmax < opt.tol) break;
            if (it >= opt.corrector_max) {
                ok = false;
                break;
            }
            ModelParams pc = detail::with_param(params0, which, muc);
            ReducedState sc = chart.unpack(xc);
            Eigen::MatrixXd H = chart.hessian(jacobian(pc, rs, sc));
            double h = 1e-6 * std::max(1.0, std::fabs(muc));
            std::vector<double> gp = grad_at(chart, xc, muc + h), gm = grad_at(chart, xc, muc - h);
            Eigen::MatrixXd Mx(long(chart.dim) + 1, long(chart.dim) + 1);
            Eigen::VectorXd rhs(long(chart.dim) + 1);
            for (std::size_t a = 0; a < chart.dim; ++a) {
                for (std::size_t bcoord = 0; bcoord < chart.dim; ++bcoord)
                    Mx(long(a), long(bcoord)) = H(long(a), long(bcoord));
                Mx(long(a), long(chart.dim)) = (gp[a] - gm[a]) / (2.0 * h);
                rhs(long(a)) = -gc[a];
            }
            for (std::size_t a = 0; a <= chart.dim; ++a)
                Mx(long(chart.dim), long(a)) = weights[a] * weights[a] * tangent[a];
            rhs(long(chart.dim)) = -cons;
            Eigen::VectorXd delta = Mx.fullPivLu().solve(rhs);
            if (!delta.allFinite()) {
                ok = false;
                break;
            }
            for (std::size_t a = 0; a < chart.dim; ++a) xc[a] += delta(long(a));
            muc += delta(long(chart.dim));
            if (!feasible(xc)) {
                ok = false;
                break;
            }
        }

        if (!ok) {
            ds *= 0.5;
            if (ds < opt.ds_min) {
                if (out.points.empty()) throw BranchEndError("continuation: first step failed");
                out.end = BranchEnd::step_underflow;
                return out;
            }
            continue;
        }

        // accept
        x_prevpt = x;
        mu_prevpt = mu;
        x = xc;
        mu = muc;
        ModelParams pa = detail::with_param(params0, which, mu);
        Candidate cand;
        cand.group_id = rs.group.id;
        cand.params = pa;
        cand.state = detail::symmetrized(rs, chart.unpack(x));
        Residual r = residual(pa, rs, cand.state);
        cand.residual_norm = residual_norm(rs, r);
        cand.energy = energy(pa, rs, cand.state);
        out.points.push_back(cand);
        ++produced;

        if ((forward && mu >= opt.target) || (!forward && mu <= opt.target)) {
            out.end = BranchEnd::range_complete;
            return out;
        }

        // secant tangent for the next step
        rebuild_weights();
        std::vector<double> t(chart.dim + 1);
        for (std::size_t a = 0; a < chart.dim; ++a) t[a] = x[a] - x_prevpt[a];
        t[chart.dim] = mu - mu_prevpt;
        double n = wnorm(t);
        if (n == 0.0) {
            tangent = initial_tangent();
        } else {
            for (double& v : t) v /= n;
            tangent = t;
        }
        if (tangent_trace) tangent_trace->push_back({tangent, weights});
        ds = std::min(ds * 1.3, opt.ds_max);
    }
}

}  // namespace oksym
