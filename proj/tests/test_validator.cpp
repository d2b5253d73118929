// Certification layer: tail symbol operators, tail constants, operator norm
// formulas, the residual / defect / Lipschitz bounds, the radii polynomials,
// and full proof runs on refined candidates.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "oksym/validator.hpp"
#include "support/testgroups.hpp"

using namespace oksym;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ReducedIndexSet setup(const SpaceGroup& g, double K, const ModelParams& p) {
    return build_reduced_set(g, K, initial_kappa(g, p.gamma), p.nu);
}

std::vector<double> omega_of(const ReducedIndexSet& rs) {
    std::vector<double> om(std::size_t(rs.N));
    for (int i = 1; i <= rs.N; ++i) om[std::size_t(i - 1)] = rs.modes[std::size_t(i)].omega;
    return om;
}

// refined candidate anchored at its set, with the approximate inverse
struct Fixture {
    SpaceGroup g;
    ModelParams p;
    ReducedIndexSet rs;
    ReducedState st{};
    Eigen::MatrixXcd A;
};

Fixture* make_fixture(const std::string& name, double gamma, double m, double K,
                      double first_amp) {
    auto* f = new Fixture{oktest::load(name), {}, {}, {}, {}};
    f->p.gamma = gamma;
    f->p.m = m;
    f->p.K = K;
    f->rs = setup(f->g, K, f->p);

    ReducedState init(f->rs, std::vector<double>(f->rs.kappa_bar));
    init.b.v[1] = first_amp;
    Candidate c0 = minimize(f->p, f->rs, init);
    Candidate c = finalize_candidate(f->p, f->rs, c0.state, K);
    REQUIRE(c.residual_norm < 1e-9);
    REQUIRE(norm_X0(c.state.b) > 1e-3);  // not the uniform state

    f->st = ReducedState(f->rs, std::vector<double>(f->rs.kappa_bar));
    f->st.b = c.state.b;
    f->st.b.set = &f->rs;
    f->A = build_A(assemble(jacobian(f->p, f->rs, f->st)), f->rs);
    return f;
}

Fixture& stripe8() {
    static Fixture* f = make_fixture("lamellar", 2.5, 0.0, 8.0, 0.25);
    return *f;
}

Fixture& stripe13() {
    static Fixture* f = make_fixture("lamellar", 2.5, 0.0, 13.0, 0.25);
    return *f;
}

Fixture& cylinder7() {
    static Fixture* f = make_fixture("columnar", 2.5, 0.2, 7.0, -0.2);
    return *f;
}

ReducedCoeffs random_direction(const ReducedIndexSet& rs, std::mt19937_64& rng) {
    ReducedCoeffs a = conj_symmetrize(oktest::random_reduced(rs, rng));
    a.v[0] = 0.0;
    double n = norm_X0(a);
    REQUIRE(n > 0.0);
    for (auto& v : a.v) v /= n;
    return a;
}

}  // namespace

TEST_CASE("tail symbol matches the closed form and inverts beyond the cutoff") {
    SpaceGroup g = oktest::load("lamellar");
    ReducedIndexSet rs = build_reduced_set(g, 4.2, {1.0}, 1.05);
    REQUIRE(rs.N == 4);

    ModelParams p;
    p.gamma = 2.5;
    p.K = 2.5;  // modes 3 and 4 fall beyond this
    TailOps ops = tail_ops(p, {1.0}, rs);

    const double lam3 = 2.0 * (9.0 / 6.25 - 1.0 + 1.0 / 9.0);
    REQUIRE(ops.lambda[3].lower() <= lam3);
    REQUIRE(ops.lambda[3].upper() >= lam3);
    REQUIRE(ops.lambda[3].upper() - ops.lambda[3].lower() < 1e-12);

    for (std::size_t i : {std::size_t(1), std::size_t(2)}) {
        REQUIRE(ops.lambda_inv[i].lower() == 0.0);
        REQUIRE(ops.lambda_inv[i].upper() == 0.0);
    }
    for (std::size_t i : {std::size_t(3), std::size_t(4)}) {
        Interval one = ops.lambda_inv[i] * ops.lambda[i];
        REQUIRE(one.lower() <= 1.0);
        REQUIRE(one.upper() >= 1.0);
        REQUIRE(ops.lambda_inv[i].lower() > 0.0);
    }

    // cutoff below the positivity scale of the symbol is rejected
    p.K = 2.0;
    REQUIRE_THROWS_AS(tail_ops(p, {1.0}, rs), ConfigError);

    // K = 0 falls back to the set's own cutoff: everything is head
    p.K = 0.0;
    TailOps all = tail_ops(p, {1.0}, rs);
    for (std::size_t i = 1; i <= 4; ++i) {
        REQUIRE(all.lambda_inv[i].upper() == 0.0);
        REQUIRE(all.lambda[i].lower() <= ops.lambda[i].upper());
    }
}

TEST_CASE("tail constants match closed forms and reject bad cutoffs") {
    const double g = 2.5, K = 3.0, nu = 1.05;
    AuxConstants a = aux_tail_constants(g, K, nu, 0.0);

    const double PK = 9.0 / 6.25 - 1.0 + 1.0 / 9.0;
    REQUIRE_THAT(a.C_P0, WithinRel(1.0 / PK, 1e-12));
    REQUIRE(a.C_P0 >= 1.0 / PK);

    // gamma > 2 branch evaluates the symbol slope at the dilated cutoff
    const double PpK = 1.0 / 6.25 - 1.0 / 81.0;
    REQUIRE_THAT(a.C_P1, WithinRel(9.0 * PpK / PK, 1e-12));

    // K sits before the peak of z^2 nu^{-2z}, so the global peak is used
    REQUIRE(K * std::log(nu) < 1.0);
    const double peak = 1.0 / ((std::exp(1.0) * std::log(nu)) * (std::exp(1.0) * std::log(nu)));
    REQUIRE_THAT(a.D_P1, WithinRel(peak / 6.25, 1e-10));
    REQUIRE_THAT(a.D_P0, WithinRel(a.D_P1, 1e-12));  // r1 = 0 collapses the dilation
    REQUIRE_THAT(a.D_P2, WithinRel(2.0 / 9.0 * std::pow(nu, -6.0), 1e-10));

    // past the peak the boundary value applies and decays with K
    AuxConstants far = aux_tail_constants(g, 30.0, nu, 0.0);
    REQUIRE(30.0 * std::log(nu) > 1.0);
    REQUIRE_THAT(far.D_P1, WithinRel(900.0 * std::pow(nu, -60.0) / 6.25, 1e-10));

    REQUIRE_THROWS_AS(aux_tail_constants(g, 1.4, nu, 0.0), ConfigError);   // K^2 < 2
    REQUIRE_THROWS_AS(aux_tail_constants(g, 2.0, nu, 0.0), ConfigError);   // K^2 below root
    REQUIRE_THROWS_AS(aux_tail_constants(g, K, nu, 0.9), ConfigError);     // shrunk box too low
    REQUIRE_THROWS_AS(aux_tail_constants(g, K, 1.0, 0.0), ConfigError);    // no decay
    REQUIRE_THROWS_AS(aux_tail_constants(g, K, nu, 1.0), ConfigError);     // radius not < 1
    REQUIRE_THROWS_AS(aux_tail_constants(0.0, K, nu, 0.0), ConfigError);
}

TEST_CASE("tail constants dominate sampled symbol values") {
    const double K = 3.0, nu = 1.05, r1 = 0.05;
    for (double g : {1.5, 2.5}) {
        AuxConstants a = aux_tail_constants(g, K, nu, r1);
        std::mt19937_64 rng(404);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int t = 0; t < 100; ++t) {
            const double z = K * (1.0 + 1e-9) + 30.0 * u01(rng) * u01(rng);
            const double y0 = z * z;
            const double y = y0 * (1.0 - r1 + 2.0 * r1 * u01(rng));
            const double w = std::pow(nu, -2.0 * z);
            const double tol = 1.0 + 1e-12;
            REQUIRE(1.0 / P_eval(y0, g, 0) <= a.C_P0 * tol);
            REQUIRE(std::fabs(P_eval(y, g, 1)) * y0 / P_eval(y0, g, 0) <= a.C_P1 * tol);
            REQUIRE(std::fabs(P_eval(y, g, 0)) * w <= a.D_P0 * tol);
            REQUIRE(std::fabs(P_eval(y, g, 1)) * y0 * w <= a.D_P1 * tol);
            REQUIRE(std::fabs(P_eval(y, g, 2)) * y0 * y0 * w <= a.D_P2 * tol);
        }
    }
}

TEST_CASE("operator norm formulas agree with brute force suprema") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> uw(0.5, 2.0);
    const long J = 3, N = 6;
    std::vector<double> kb(J), om(N);
    for (auto& v : kb) v = uw(rng);
    for (auto& v : om) v = uw(rng);

    Eigen::MatrixXcd Qkk(J, J), Qbk(J, N), Qkb(N, J), Qbb(N, N);
    auto fill = [&](Eigen::MatrixXcd& Q) {
        for (long r = 0; r < Q.rows(); ++r)
            for (long c = 0; c < Q.cols(); ++c) Q(r, c) = oktest::random_unit_complex(rng);
    };
    fill(Qkk);
    fill(Qbk);
    fill(Qkb);
    fill(Qbb);

    const double nkk = op_norm_kk(Qkk, kb);
    const double nbk = op_norm_bk(Qbk, kb, om);
    const double nkb = op_norm_kb(Qkb, kb, om);
    const double nbb = op_norm_bb(Qbb, om);

    SECTION("random inputs never exceed the formulas") {
        std::uniform_real_distribution<double> us(-1.0, 1.0);
        for (int t = 0; t < 200; ++t) {
            Eigen::VectorXcd xk(J);  // scale inputs are real-valued
            for (long j = 0; j < J; ++j) xk(j) = us(rng) * kb[std::size_t(j)];
            Eigen::VectorXcd xb(N);
            for (long i = 0; i < N; ++i) xb(i) = oktest::random_unit_complex(rng);
            double xbn = 0.0;
            for (long i = 0; i < N; ++i) xbn += std::abs(xb(i)) * om[std::size_t(i)];
            xb /= xbn;

            Eigen::VectorXcd yk = Qkk * xk;
            double out = 0.0;
            for (long j = 0; j < J; ++j)
                out = std::max(out, std::abs(yk(j)) / kb[std::size_t(j)]);
            REQUIRE(out <= nkk * (1.0 + 1e-12));

            yk = Qbk * xb;
            out = 0.0;
            for (long j = 0; j < J; ++j)
                out = std::max(out, std::abs(yk(j)) / kb[std::size_t(j)]);
            REQUIRE(out <= nbk * (1.0 + 1e-12));

            Eigen::VectorXcd yb = Qkb * xk;
            out = 0.0;
            for (long i = 0; i < N; ++i) out += om[std::size_t(i)] * std::abs(yb(i));
            REQUIRE(out <= nkb * (1.0 + 1e-12));

            yb = Qbb * xb;
            out = 0.0;
            for (long i = 0; i < N; ++i) out += om[std::size_t(i)] * std::abs(yb(i));
            REQUIRE(out <= nbb * (1.0 + 1e-12));
        }
    }

    SECTION("structured inputs attain them") {
        // columns of the coefficient block: a scaled basis vector is extremal
        double best = 0.0;
        for (long k = 0; k < N; ++k) {
            double col = 0.0;
            for (long j = 0; j < J; ++j)
                col = std::max(col, std::abs(Qbk(j, k)) / kb[std::size_t(j)]);
            best = std::max(best, col / om[std::size_t(k)]);
        }
        REQUIRE_THAT(best, WithinRel(nbk, 1e-12));

        best = 0.0;
        for (long k = 0; k < N; ++k) {
            double col = 0.0;
            for (long kp = 0; kp < N; ++kp)
                col += om[std::size_t(kp)] * std::abs(Qbb(kp, k));
            best = std::max(best, col / om[std::size_t(k)]);
        }
        REQUIRE_THAT(best, WithinRel(nbb, 1e-12));

        // sign vectors attain the scale-input column enumeration
        double bestkb = 0.0;
        for (long bits = 0; bits < (1L << J); ++bits) {
            Eigen::VectorXcd x(J);
            for (long j = 0; j < J; ++j)
                x(j) = ((bits >> j) & 1 ? -1.0 : 1.0) * kb[std::size_t(j)];
            Eigen::VectorXcd y = Qkb * x;
            double s = 0.0;
            for (long i = 0; i < N; ++i) s += om[std::size_t(i)] * std::abs(y(i));
            bestkb = std::max(bestkb, s);
        }
        REQUIRE_THAT(bestkb, WithinRel(nkb, 1e-12));

        // for entrywise nonnegative blocks the all-ones sign vector attains
        // the row form of the scale-to-scale norm
        Eigen::MatrixXcd Qpos = Qkk.cwiseAbs().cast<std::complex<double>>();
        Eigen::VectorXcd ones(J);
        for (long j = 0; j < J; ++j) ones(j) = kb[std::size_t(j)];
        Eigen::VectorXcd y = Qpos * ones;
        double out = 0.0;
        for (long j = 0; j < J; ++j) out = std::max(out, std::abs(y(j)) / kb[std::size_t(j)]);
        REQUIRE_THAT(out, WithinRel(op_norm_kk(Qpos, kb), 1e-12));
    }
}

TEST_CASE("defect bounds collapse for the mean-zero uniform state") {
    SpaceGroup g = oktest::load("lamellar");
    ModelParams p;
    p.gamma = 2.5;
    p.m = 0.0;
    ReducedIndexSet rs = build_reduced_set(g, 3.3, {2.5}, 1.05);
    REQUIRE(rs.N == 2);

    ReducedCoeffs b(rs);  // the uniform state
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(3, 3);
    A(0, 0) = 1.0;
    A(1, 1) = 1.0 / (2.0 * P_eval(2.5, 2.5, 0));
    A(2, 2) = 1.0 / (2.0 * P_eval(10.0, 2.5, 0));

    auto [y1, y2] = bound_Y(p, rs, b, A);
    REQUIRE(y1 == 0.0);
    REQUIRE(y2 == 0.0);

    ZBounds z = bound_Z(p, rs, b, A);
    // the scale equation is identically zero at the uniform state, so its
    // block of the defect is the full identity: the bound must say exactly 1
    REQUIRE(z.Z11 == 1.0);
    REQUIRE(z.Z12 == 0.0);
    REQUIRE(z.Z21 == 0.0);
    REQUIRE(z.Z22 <= 1e-14);

    WBounds w = bound_W(p, rs, b, A, 1e-4, 1e-6);
    // every second difference proportional to the coefficients vanishes
    REQUIRE(w.at(1, 1, 1) == 0.0);
    REQUIRE(w.at(2, 1, 1) == 0.0);
    REQUIRE(w.at(1, 2, 1) == 0.0);
    REQUIRE(w.at(2, 2, 1) > 0.0);  // tail slope constant survives

    // the degenerate scale block also defeats the inverse builder
    ReducedState st(rs, {2.5});
    Certificate cert = prove(p, rs, st);
    REQUIRE(cert.status == CertStatus::failed);
    REQUIRE_THAT(cert.reason, ContainsSubstring("not invertible"));
}

TEST_CASE("second difference bounds never shrink when the box grows") {
    Fixture& f = stripe8();
    WBounds w1 = bound_W(f.p, f.rs, f.st.b, f.A, 1e-4, 1e-6);
    WBounds w2 = bound_W(f.p, f.rs, f.st.b, f.A, 2e-4, 2e-6);
    for (int i = 1; i <= 2; ++i)
        for (int ip = 1; ip <= 2; ++ip)
            for (int iq = 1; iq <= 2; ++iq) {
                REQUIRE(w1.at(i, ip, iq) >= 0.0);
                REQUIRE(w2.at(i, ip, iq) >= w1.at(i, ip, iq));
            }
}

TEST_CASE("residual bound dominates the point residual and drops with the cutoff") {
    Fixture& f8 = stripe8();
    auto [y18, y28] = bound_Y(f8.p, f8.rs, f8.st.b, f8.A);

    // the point evaluation through the same inverse can never exceed it
    Residual r = residual(f8.p, f8.rs, f8.st);
    const long J = f8.rs.group.J, N = f8.rs.N;
    Eigen::VectorXcd v(J + N);
    for (long j = 0; j < J; ++j) v(j) = r.H[std::size_t(j)];
    for (long i = 0; i < N; ++i) v(J + i) = r.F[std::size_t(i)];
    Eigen::VectorXcd av = f8.A * v;
    double pk = 0.0, pb = 0.0;
    for (long j = 0; j < J; ++j)
        pk = std::max(pk, std::abs(av(j)) / f8.rs.kappa_bar[std::size_t(j)]);
    for (long i = 0; i < N; ++i)
        pb += std::abs(av(J + i)) * f8.rs.modes[std::size_t(i + 1)].omega;
    REQUIRE(pk <= y18 * (1.0 + 1e-9) + 1e-18);
    REQUIRE(pb <= y28 * (1.0 + 1e-9) + 1e-18);

    // the K = 8 bound is dominated by truncation flux just past the cutoff;
    // absorbing two more harmonic shells shrinks it by orders of magnitude
    Fixture& f13 = stripe13();
    auto [y113, y213] = bound_Y(f13.p, f13.rs, f13.st.b, f13.A);
    REQUIRE(y213 < y28 / 10.0);
    REQUIRE(y113 <= y18 + y28);  // scale equation stays under control too
}

TEST_CASE("zero-padded cutoff growth never raises the residual bound") {
    // pad the candidate into a deeper set and keep the same operator: the
    // enlarged head rows take their diagonal tail entries, so the flux just
    // moves between the two sums of the bound without growing
    Fixture& f = stripe8();
    auto [y1, y2] = bound_Y(f.p, f.rs, f.st.b, f.A);

    for (double Kp : {10.0, 13.0}) {
        ReducedIndexSet rsp = build_reduced_set(f.g, Kp, f.rs.kappa_bar, f.p.nu);
        ReducedCoeffs bp(rsp);
        for (int i = 1; i <= f.rs.N; ++i) {
            int ip = rsp.index_of(f.rs.modes[std::size_t(i)].k);
            REQUIRE(ip >= 1);
            bp.v[std::size_t(ip)] = f.st.b.v[std::size_t(i)];
        }
        const long J = rsp.group.J, Np = rsp.N, N = f.rs.N;
        Eigen::MatrixXcd Ap = Eigen::MatrixXcd::Zero(J + Np, J + Np);
        Ap.block(0, 0, J + N, J + N) = f.A;
        for (long i = N + 1; i <= Np; ++i) {
            const Mode& mo = rsp.modes[std::size_t(i)];
            double lam = P_eval(detail::delta_from_terms(mo.delta, rsp.kappa_bar), f.p.gamma, 0) *
                         double(mo.orbit_size);
            Ap(J + i - 1, J + i - 1) = 1.0 / lam;
        }
        auto [y1p, y2p] = bound_Y(f.p, rsp, bp, Ap);
        REQUIRE(y1p <= y1 * (1.0 + 1e-9) + 1e-18);
        REQUIRE(y2p <= y2 * (1.0 + 1e-9) + 1e-18);
    }
}

TEST_CASE("defect bounds certify the refined candidate and dominate samples") {
    Fixture& f = stripe8();
    ZBounds z = bound_Z(f.p, f.rs, f.st.b, f.A);

    // the scale-input defect of an exact numerical inverse is roundoff
    REQUIRE(z.Z11 < 1e-10);
    REQUIRE(z.Z21 < 1e-10);
    REQUIRE(z.Z22 < 1.0);
    REQUIRE(z.Z12 < 1.0);

    Eigen::MatrixXcd M = assemble(jacobian(f.p, f.rs, f.st));
    const long J = f.rs.group.J, N = f.rs.N;

    std::mt19937_64 rng(2024);
    for (int t = 0; t < 50; ++t) {
        ReducedCoeffs a = random_direction(f.rs, rng);
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(J + N);
        for (long i = 0; i < N; ++i) v(J + i) = a.v[std::size_t(i + 1)];
        Eigen::VectorXcd u = v - f.A * (M * v);
        double qk = 0.0, qb = 0.0;
        for (long j = 0; j < J; ++j)
            qk = std::max(qk, std::abs(u(j)) / f.rs.kappa_bar[std::size_t(j)]);
        for (long i = 0; i < N; ++i)
            qb += std::abs(u(J + i)) * f.rs.modes[std::size_t(i + 1)].omega;
        REQUIRE(qk <= z.Z12 * (1.0 + 1e-9) + 1e-15);
        REQUIRE(qb <= z.Z22 * (1.0 + 1e-9) + 1e-15);
    }

    for (long bits = 0; bits < (1L << J); ++bits) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(J + N);
        for (long j = 0; j < J; ++j)
            v(j) = ((bits >> j) & 1 ? -1.0 : 1.0) * f.rs.kappa_bar[std::size_t(j)];
        Eigen::VectorXcd u = v - f.A * (M * v);
        double qk = 0.0, qb = 0.0;
        for (long j = 0; j < J; ++j)
            qk = std::max(qk, std::abs(u(j)) / f.rs.kappa_bar[std::size_t(j)]);
        for (long i = 0; i < N; ++i)
            qb += std::abs(u(J + i)) * f.rs.modes[std::size_t(i + 1)].omega;
        REQUIRE(qk <= z.Z11 * (1.0 + 1e-9) + 1e-15);
        REQUIRE(qb <= z.Z21 * (1.0 + 1e-9) + 1e-15);
    }
}

TEST_CASE("second difference bounds dominate sampled derivative shifts") {
    Fixture& f = stripe8();
    const double r1s = 1e-4, r2s = 1e-6;
    WBounds wb = bound_W(f.p, f.rs, f.st.b, f.A, r1s, r2s);

    const long J = f.rs.group.J, N = f.rs.N;
    std::vector<double> om = omega_of(f.rs);
    Eigen::MatrixXcd M0 = assemble(jacobian(f.p, f.rs, f.st));

    std::mt19937_64 rng(515);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto block_norms = [&](const Eigen::MatrixXcd& D) {
        return std::array<double, 4>{
            op_norm_kk(D.block(0, 0, J, J), f.rs.kappa_bar),
            op_norm_bk(D.block(0, J, J, N), f.rs.kappa_bar, om),
            op_norm_kb(D.block(J, 0, N, J), f.rs.kappa_bar, om),
            op_norm_bb(D.block(J, J, N, N), om)};
    };

    for (int t = 0; t < 20; ++t) {
        const double dr1 = r1s * (0.05 + 0.95 * u01(rng));
        const double dr2 = r2s * (0.05 + 0.95 * u01(rng));
        ReducedState s1(f.rs, std::vector<double>(f.rs.kappa_bar));
        for (auto& kj : s1.kappa) kj *= 1.0 + (u01(rng) < 0.5 ? -dr1 : dr1);
        s1.b = f.st.b;
        s1.b.set = &f.rs;

        ReducedState s2 = s1;
        s2.b.set = &f.rs;
        ReducedCoeffs dir = random_direction(f.rs, rng);
        for (std::size_t i = 1; i < s2.b.v.size(); ++i) s2.b.v[i] += dr2 * dir.v[i];

        Eigen::MatrixXcd M1 = assemble(jacobian(f.p, f.rs, s1));
        Eigen::MatrixXcd M2 = assemble(jacobian(f.p, f.rs, s2));

        auto n1 = block_norms(f.A * (M1 - M0));
        REQUIRE(n1[0] <= wb.at(1, 1, 1) * dr1 * (1.0 + 1e-8) + 1e-15);
        REQUIRE(n1[1] <= wb.at(1, 2, 1) * dr1 * (1.0 + 1e-8) + 1e-15);
        REQUIRE(n1[2] <= wb.at(2, 1, 1) * dr1 * (1.0 + 1e-8) + 1e-15);
        REQUIRE(n1[3] <= wb.at(2, 2, 1) * dr1 * (1.0 + 1e-8) + 1e-15);

        auto n2 = block_norms(f.A * (M2 - M1));
        REQUIRE(n2[0] <= wb.at(1, 1, 2) * dr2 * (1.0 + 1e-8) + 1e-15);
        REQUIRE(n2[1] <= wb.at(1, 2, 2) * dr2 * (1.0 + 1e-8) + 1e-15);
        REQUIRE(n2[2] <= wb.at(2, 1, 2) * dr2 * (1.0 + 1e-8) + 1e-15);
        REQUIRE(n2[3] <= wb.at(2, 2, 2) * dr2 * (1.0 + 1e-8) + 1e-15);
    }
}

TEST_CASE("radii polynomial values match hand computations") {
    RadiiBounds b;
    b.Y1 = b.Y2 = 1e-6;
    b.Z11 = b.Z22 = 0.5;
    b.r1_star = b.r2_star = 1e-3;

    PolyValues q = radii_polynomials(b, 1e-5, 1e-5);
    REQUIRE_THAT(q.p1, WithinRel(-4e-6, 1e-12));
    REQUIRE_THAT(q.p2, WithinRel(-4e-6, 1e-12));
    REQUIRE(q.pt3 == -1.0);
    REQUIRE(q.pt4 == -0.25);

    RadiiBounds zero;
    zero.r1_star = zero.r2_star = 1.0;
    PolyValues qz = radii_polynomials(zero, 0.3, 0.7);
    REQUIRE(qz.p1 == -0.3);
    REQUIRE(qz.p2 == -0.7);
    REQUIRE(qz.pt3 == -2.0);
    REQUIRE(qz.pt4 == -1.0);

    REQUIRE_THROWS_AS(radii_polynomials(b, 2e-3, 0.0), ConfigError);
    REQUIRE_THROWS_AS(radii_polynomials(b, 0.0, 2e-3), ConfigError);
    REQUIRE_THROWS_AS(radii_polynomials(b, -1e-9, 0.0), ConfigError);

    // the strict variant counts the full second difference in the dominance
    // rows, so it sits above the averaged form
    RadiiBounds w;
    w.W[0][0][0] = 1.0;
    w.r1_star = w.r2_star = 0.1;
    PolyValues loose = radii_polynomials(w, 0.05, 0.0, false);
    PolyValues strict = radii_polynomials(w, 0.05, 0.0, true);
    REQUIRE_THAT(loose.p1, WithinRel(0.05 * (0.5 * 0.05 - 1.0), 1e-12));
    REQUIRE_THAT(strict.p1, WithinRel(0.05 * (0.05 - 1.0), 1e-12));
    REQUIRE(strict.p1 > loose.p1);
    REQUIRE(strict.pt3 == loose.pt3);
    REQUIRE(strict.pt4 == loose.pt4);
}

TEST_CASE("spectral margins match a direct eigenvalue oracle") {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    int decided = 0;
    for (int t = 0; t < 200; ++t) {
        RadiiBounds b;
        b.Z11 = u(rng);
        b.Z12 = u(rng);
        b.Z21 = u(rng);
        b.Z22 = u(rng);
        b.r1_star = b.r2_star = 1.0;
        PolyValues q = radii_polynomials(b, 0.0, 0.0);

        const double tr = b.Z11 + b.Z22;
        const double det = b.Z11 * b.Z22 - b.Z12 * b.Z21;
        const double sigma = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
        if (std::fabs(sigma - 1.0) < 1e-9) continue;
        ++decided;
        REQUIRE((q.pt3 < 0.0 && q.pt4 < 0.0) == (sigma < 1.0));
    }
    REQUIRE(decided > 150);
}

TEST_CASE("radius search finds the minimal corner and reports failure as a value") {
    RadiiBounds b;
    b.Y1 = b.Y2 = 1e-6;
    b.Z11 = b.Z22 = 0.5;
    b.r1_star = b.r2_star = 1e-3;

    RhatResult rr = find_r_hat(b);
    REQUIRE(rr.success);
    // each radius must pass 2e-6 for its polynomial to turn negative, and
    // the bisection pins the corner to that threshold
    REQUIRE(rr.r1 >= 2e-6);
    REQUIRE(rr.r1 <= 2e-6 * (1.0 + 1e-6));
    REQUIRE(rr.r2 >= 2e-6);
    REQUIRE(rr.r2 <= 2e-6 * (1.0 + 1e-6));
    REQUIRE(rr.polys.p1 < 0.0);
    REQUIRE(rr.polys.p2 < 0.0);
    REQUIRE(rr.polys.pt3 < 0.0);
    REQUIRE(rr.polys.pt4 < 0.0);

    RadiiBounds bad = b;
    bad.Y1 = 1.0;  // first polynomial can never turn negative
    RhatResult fr = find_r_hat(bad);
    REQUIRE_FALSE(fr.success);
    REQUIRE(fr.r1 == 0.0);
    REQUIRE(fr.r2 == 0.0);

    RadiiBounds empty;
    REQUIRE_FALSE(find_r_hat(empty).success);
}

TEST_CASE("interior columns of the cubic derivative match the dense jacobian") {
    SpaceGroup g = oktest::load("columnar");
    ModelParams p;
    p.gamma = 2.5;
    p.m = 0.2;
    ReducedIndexSet rs = setup(g, 4.0, p);
    REQUIRE(rs.N >= 3);

    std::mt19937_64 rng(33);
    ReducedCoeffs b = random_direction(rs, rng);
    for (auto& v : b.v) v *= 0.05;

    const long n = rs.group.J + rs.N;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n);
    cert_detail::Workspace w(p, rs, b, A);

    ReducedState st(rs, std::vector<double>(rs.kappa_bar));
    st.b = b;
    st.b.set = &rs;
    JacobianIv jac = jacobian_iv(p, rs, st);

    for (int ic = 1; ic <= rs.N; ++ic) {
        std::vector<CInterval> got(rs.modes.size());
        w.phi_column(rs.modes[std::size_t(ic)], [&](std::size_t ri, const CInterval& val) {
            int h = w.head_pos[ri];
            if (h >= 1)
                got[std::size_t(h)] =
                    val * Interval(double(w.ext.modes[ri].orbit_size));
        });
        for (int i = 1; i <= rs.N; ++i) {
            CInterval expect = jac.dbf(std::size_t(i - 1), std::size_t(ic - 1));
            if (i == ic) {
                const Mode& mo = rs.modes[std::size_t(i)];
                Interval lam =
                    P_eval(detail::delta_from_terms(mo.delta, lift_kappa(rs.kappa_bar)),
                           p.gamma, 0) *
                    double(mo.orbit_size);
                expect = expect - CInterval(lam, Interval(0.0));
            }
            // two enclosures of one quantity must overlap
            const CInterval& gi = got[std::size_t(i)];
            REQUIRE(gi.re.lower() <= expect.re.upper() + 1e-15);
            REQUIRE(expect.re.lower() <= gi.re.upper() + 1e-15);
            REQUIRE(gi.im.lower() <= expect.im.upper() + 1e-15);
            REQUIRE(expect.im.lower() <= gi.im.upper() + 1e-15);
        }
    }
}

TEST_CASE("stripe candidate is proved with tight radii") {
    Fixture& f = stripe8();
    Certificate cert = prove(f.p, f.rs, f.st);
    INFO(cert.reason);
    REQUIRE(cert.status == CertStatus::proved);
    REQUIRE(cert.reason.empty());
    REQUIRE(cert.r_hat1 > 0.0);
    REQUIRE(cert.r_hat1 <= 1e-4);
    REQUIRE(cert.r_hat2 > 0.0);
    REQUIRE(cert.r_hat2 < 1e-4);
    REQUIRE(cert.polys.p1 < 0.0);
    REQUIRE(cert.polys.p2 < 0.0);
    REQUIRE(cert.polys.pt3 < 0.0);
    REQUIRE(cert.polys.pt4 < 0.0);
    REQUIRE(cert.rho1 > 0.0);
    REQUIRE(cert.rho2 > 0.0);
    REQUIRE_THAT(cert.rho1 + cert.rho2, WithinAbs(1.0, 1e-12));
    REQUIRE(cert.params.K == f.rs.K);
    REQUIRE(cert.group_id == "lamellar");

    // a deeper cutoff wipes out the truncation flux entirely
    Fixture& f13 = stripe13();
    Certificate deep = prove(f13.p, f13.rs, f13.st);
    INFO(deep.reason);
    REQUIRE(deep.status == CertStatus::proved);
    REQUIRE(deep.r_hat2 < 1e-6);
    REQUIRE(deep.bounds.Y2 < cert.bounds.Y2 / 10.0);

    // the strict dominance variant proves the same candidate
    ProveOptions strict;
    strict.strict_simple = true;
    Certificate sc = prove(f13.p, f13.rs, f13.st, strict);
    INFO(sc.reason);
    REQUIRE(sc.status == CertStatus::proved);
    REQUIRE(sc.strict_simple);
    REQUIRE(sc.r_hat2 < 4.0 * deep.r_hat2 + 1e-12);

    // determinism: bit-identical reruns
    Certificate again = prove(f.p, f.rs, f.st);
    REQUIRE(again.status == CertStatus::proved);
    REQUIRE(again.r_hat1 == cert.r_hat1);
    REQUIRE(again.r_hat2 == cert.r_hat2);
    REQUIRE(again.bounds.Y2 == cert.bounds.Y2);
    REQUIRE(again.bounds.Z22 == cert.bounds.Z22);
    REQUIRE(again.bounds.W[1][1][1] == cert.bounds.W[1][1][1]);
}

TEST_CASE("hexagonal cylinder candidate is proved") {
    Fixture& f = cylinder7();
    // the scale equation is quadratically small in the coefficients, so its
    // inverse rows are large and the cross term of the first polynomial
    // needs more scale headroom than the default rectangle allows
    ProveOptions opt;
    opt.r1_star = 1e-3;
    Certificate cert = prove(f.p, f.rs, f.st, opt);
    INFO(cert.reason);
    REQUIRE(cert.status == CertStatus::proved);
    REQUIRE(cert.r_hat2 > 0.0);
    REQUIRE(cert.r_hat2 < 1e-2);
    REQUIRE(cert.bounds.Z22 < 1.0);
    REQUIRE(cert.group_id == "columnar");
}

TEST_CASE("certified ball maps into itself under the Newton-like map") {
    Fixture& f = stripe8();
    Certificate cert = prove(f.p, f.rs, f.st);
    REQUIRE(cert.status == CertStatus::proved);

    const long J = f.rs.group.J, N = f.rs.N;
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> u11(-1.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        ReducedState x(f.rs, std::vector<double>(f.rs.kappa_bar));
        std::vector<double> dk(std::size_t(J), 0.0);
        for (long j = 0; j < J; ++j) {
            dk[std::size_t(j)] = u11(rng) * cert.r_hat1 * f.rs.kappa_bar[std::size_t(j)];
            x.kappa[std::size_t(j)] += dk[std::size_t(j)];
        }
        ReducedCoeffs dir = random_direction(f.rs, rng);
        const double s = u01(rng) * cert.r_hat2;
        x.b = f.st.b;
        x.b.set = &f.rs;
        for (std::size_t i = 1; i < x.b.v.size(); ++i) x.b.v[i] += s * dir.v[i];

        Residual r = residual(f.p, f.rs, x);
        Eigen::VectorXcd v(J + N);
        for (long j = 0; j < J; ++j) v(j) = r.H[std::size_t(j)];
        for (long i = 0; i < N; ++i) v(J + i) = r.F[std::size_t(i)];
        Eigen::VectorXcd av = f.A * v;

        // displacement of the image from the center, blockwise
        double nk = 0.0, nb = 0.0;
        for (long j = 0; j < J; ++j)
            nk = std::max(nk, std::abs(dk[std::size_t(j)] - av(j)) /
                                  f.rs.kappa_bar[std::size_t(j)]);
        for (long i = 0; i < N; ++i)
            nb += std::abs(s * dir.v[std::size_t(i + 1)] - av(J + i)) *
                  f.rs.modes[std::size_t(i + 1)].omega;
        REQUIRE(nk <= cert.r_hat1 * (1.0 + 1e-9) + 1e-16);
        REQUIRE(nb <= cert.r_hat2 * (1.0 + 1e-9) + 1e-16);
    }
}

TEST_CASE("proof fails honestly on bad inputs") {
    Fixture& f = stripe8();

    SECTION("perturbed coefficients blow the residual") {
        ReducedState st = f.st;
        st.b.set = &f.rs;
        st.b.v[1] += 0.05;  // self-paired mode stays conjugate symmetric
        Certificate cert = prove(f.p, f.rs, st);
        REQUIRE(cert.status == CertStatus::failed);
        REQUIRE_THAT(cert.reason, ContainsSubstring("no radius pair"));
    }

    SECTION("cutoff below the validity region") {
        SpaceGroup g = oktest::load("lamellar");
        ModelParams p;
        p.gamma = 2.5;
        ReducedIndexSet rs = build_reduced_set(g, 2.0, {2.5}, 1.05);
        ReducedState st(rs, {2.5});
        std::mt19937_64 rng(5);
        st.b = random_direction(rs, rng);
        for (auto& v : st.b.v) v *= 0.1;
        Certificate cert = prove(p, rs, st);
        REQUIRE(cert.status == CertStatus::failed);
        REQUIRE_THAT(cert.reason, ContainsSubstring("cutoff too small"));
    }

    SECTION("coefficients that break the conjugation symmetry") {
        ReducedState st = f.st;
        st.b.set = &f.rs;
        st.b.v[1] += std::complex<double>(0.0, 0.01);
        Certificate cert = prove(f.p, f.rs, st);
        REQUIRE(cert.status == CertStatus::failed);
        REQUIRE_THAT(cert.reason, ContainsSubstring("conjugate symmetric"));
    }

    SECTION("scales away from the anchor") {
        ReducedState st = f.st;
        st.b.set = &f.rs;
        st.kappa[0] *= 1.01;
        Certificate cert = prove(f.p, f.rs, st);
        REQUIRE(cert.status == CertStatus::failed);
        REQUIRE_THAT(cert.reason, ContainsSubstring("not anchored"));
    }

    SECTION("nonzero mean slot") {
        ReducedState st = f.st;
        st.b.set = &f.rs;
        st.b.v[0] = 0.1;
        Certificate cert = prove(f.p, f.rs, st);
        REQUIRE(cert.status == CertStatus::failed);
        REQUIRE_THAT(cert.reason, ContainsSubstring("zero mode"));
    }
}
