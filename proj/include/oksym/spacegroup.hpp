// Crystallographic symmetry groups acting on the Fourier lattice.
//
// A group element is stored as the integer lattice action beta (a unimodular
// 3x3 matrix acting on Fourier indices k) together with a rational shift D.
// The induced phase on mode k is alpha_g(k) = exp(2*pi*i beta_g(k).D_g).
// Groups are loaded from generator files, closed under composition, and
// validated structurally: beta must leave every quadratic form of the lattice
// class invariant, so the scale-resolved norms are symmetry invariants.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"
#include "rational.hpp"

namespace oksym {

using Idx = std::array<int, 3>;
using Mat3 = std::array<std::array<int, 3>, 3>;

inline Idx operator-(const Idx& k) { return {-k[0], -k[1], -k[2]}; }
inline Idx operator+(const Idx& a, const Idx& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Idx operator-(const Idx& a, const Idx& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline Idx mat_apply(const Mat3& m, const Idx& k) {
    Idx r{};
    for (int i = 0; i < 3; ++i) r[i] = m[i][0] * k[0] + m[i][1] * k[1] + m[i][2] * k[2];
    return r;
}

inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    return r;
}

inline Mat3 mat_transpose(const Mat3& m) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i][j] = m[j][i];
    return r;
}

inline int mat_det(const Mat3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Inverse of a determinant +-1 integer matrix (adjugate divided by det).
inline Mat3 mat_inverse_unimodular(const Mat3& m) {
    int d = mat_det(m);
    if (d != 1 && d != -1) throw InvalidGroup("lattice action is not unimodular");
    Mat3 adj{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            int r0 = (i + 1) % 3, r1 = (i + 2) % 3;
            int c0 = (j + 1) % 3, c1 = (j + 2) % 3;
            adj[j][i] = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        }
    for (auto& row : adj)
        for (auto& v : row) v *= d;
    return adj;
}

constexpr Mat3 kIdentity3 = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

struct GroupElement {
    Mat3 beta = kIdentity3;
    std::array<Rat, 3> shift{};  // components of D_g, kept in [0,1)

    friend bool operator==(const GroupElement& a, const GroupElement& b) {
        return a.beta == b.beta && a.shift == b.shift;
    }
    friend bool operator<(const GroupElement& a, const GroupElement& b) {
        if (a.beta != b.beta) return a.beta < b.beta;
        for (int i = 0; i < 3; ++i)
            if (a.shift[i] != b.shift[i]) return a.shift[i] < b.shift[i];
        return false;
    }
};

inline GroupElement identity_element() { return GroupElement{}; }

// Composition mirrors the action on coefficient sequences: the product has
// beta_a beta_b, and the shift is fixed by the phase cocycle
// alpha_prod(k) = alpha_a(..) alpha_b(..), giving D_a + beta_a^{-T} D_b.
inline GroupElement compose(const GroupElement& a, const GroupElement& b) {
    GroupElement r;
    r.beta = mat_mul(a.beta, b.beta);
    Mat3 ait = mat_transpose(mat_inverse_unimodular(a.beta));
    for (int i = 0; i < 3; ++i) {
        Rat acc = a.shift[i];
        for (int j = 0; j < 3; ++j) acc = acc + std::int64_t(ait[i][j]) * b.shift[j];
        r.shift[i] = acc.mod1();
    }
    return r;
}

inline GroupElement inverse(const GroupElement& g) {
    GroupElement r;
    r.beta = mat_inverse_unimodular(g.beta);
    for (int i = 0; i < 3; ++i) {
        Rat acc(0);
        for (int j = 0; j < 3; ++j) acc = acc - std::int64_t(g.beta[j][i]) * g.shift[j];
        r.shift[i] = acc.mod1();
    }
    return r;
}

// alpha_g(k) = exp(2*pi*i beta_g(k).D_g), exact as a rational angle.
inline PhaseAngle alpha(const GroupElement& g, const Idx& k) {
    Idx bk = mat_apply(g.beta, k);
    Rat acc(0);
    for (int i = 0; i < 3; ++i) acc = acc + std::int64_t(bk[i]) * g.shift[i];
    return PhaseAngle(acc);
}

enum class Lattice { orthorhombic, tetragonal, trigonal, hexagonal, cubic, lamellar, columnar };

// Number of independent length scales of the periodicity cell.
inline int scale_count(Lattice t) {
    switch (t) {
        case Lattice::orthorhombic: return 3;
        case Lattice::tetragonal: return 2;
        case Lattice::trigonal: return 2;
        case Lattice::hexagonal: return 2;
        case Lattice::cubic: return 1;
        case Lattice::lamellar: return 1;
        case Lattice::columnar: return 1;
    }
    std::abort();
}

// Axes along which Fourier indices may be nonzero (profiles of lower
// dimensional classes are constant along the inactive axes).
inline std::array<bool, 3> active_axes(Lattice t) {
    switch (t) {
        case Lattice::lamellar: return {true, false, false};
        case Lattice::columnar: return {true, true, false};
        default: return {true, true, true};
    }
}

// Quadratic forms Q_j with Delta_k^j = k^T Q_j k, stored doubled so the
// hexagonal cross term stays integer.
inline std::vector<Mat3> delta_forms_x2(Lattice t) {
    const Mat3 dx = {{{2, 0, 0}, {0, 0, 0}, {0, 0, 0}}};
    const Mat3 dy = {{{0, 0, 0}, {0, 2, 0}, {0, 0, 0}}};
    const Mat3 dz = {{{0, 0, 0}, {0, 0, 0}, {0, 0, 2}}};
    const Mat3 dxy = {{{2, 0, 0}, {0, 2, 0}, {0, 0, 0}}};
    const Mat3 dhex = {{{2, 1, 0}, {1, 2, 0}, {0, 0, 0}}};
    const Mat3 dxyz = {{{2, 0, 0}, {0, 2, 0}, {0, 0, 2}}};
    switch (t) {
        case Lattice::orthorhombic: return {dx, dy, dz};
        case Lattice::tetragonal: return {dxy, dz};
        case Lattice::trigonal: return {dhex, dz};
        case Lattice::hexagonal: return {dhex, dz};
        case Lattice::cubic: return {dxyz};
        case Lattice::lamellar: return {dx};
        case Lattice::columnar: return {dhex};
    }
    std::abort();
}

inline const char* lattice_name(Lattice t) {
    switch (t) {
        case Lattice::orthorhombic: return "orthorhombic";
        case Lattice::tetragonal: return "tetragonal";
        case Lattice::trigonal: return "trigonal";
        case Lattice::hexagonal: return "hexagonal";
        case Lattice::cubic: return "cubic";
        case Lattice::lamellar: return "lamellar";
        case Lattice::columnar: return "columnar";
    }
    std::abort();
}

inline Lattice lattice_from_name(const std::string& s) {
    if (s == "orthorhombic") return Lattice::orthorhombic;
    if (s == "tetragonal") return Lattice::tetragonal;
    if (s == "trigonal") return Lattice::trigonal;
    if (s == "hexagonal") return Lattice::hexagonal;
    if (s == "cubic") return Lattice::cubic;
    if (s == "lamellar" || s == "lamellar-1D") return Lattice::lamellar;
    if (s == "columnar" || s == "columnar-2D") return Lattice::columnar;
    throw FormatError("unknown lattice type: " + s);
}

// Basis shape of the periodicity cell before scaling: identity except for the
// hexagonal in-plane basis with its 60 degree cell.
inline std::array<std::array<double, 3>, 3> lattice_basis(Lattice t) {
    if (t == Lattice::trigonal || t == Lattice::hexagonal || t == Lattice::columnar)
        return {{{1.0, 0.5, 0.0}, {0.0, std::sqrt(3.0) / 2.0, 0.0}, {0.0, 0.0, 1.0}}};
    return {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
}

struct SpaceGroup {
    std::string id;
    Lattice lattice = Lattice::cubic;
    int J = 1;
    std::array<bool, 3> active{true, true, true};
    std::vector<Mat3> form_x2;          // doubled quadratic forms, one per scale
    std::vector<GroupElement> elements; // closed, sorted, includes identity

    std::size_t order() const { return elements.size(); }

    std::vector<long long> delta_terms(const Idx& k) const {
        std::vector<long long> out(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            long long acc = 0;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    acc += (long long)form_x2[std::size_t(j)][r][c] * k[r] * k[c];
            out[std::size_t(j)] = acc / 2;
        }
        return out;
    }

    template <class S>
    S delta(const Idx& k, const std::vector<S>& kappa) const {
        auto dt = delta_terms(k);
        S acc = kappa[0] * double(dt[0]);
        for (int j = 1; j < J; ++j) acc = acc + kappa[std::size_t(j)] * double(dt[std::size_t(j)]);
        return acc;
    }

    double knorm(const Idx& k, const std::vector<double>& kappa_bar) const {
        return std::sqrt(delta(k, kappa_bar));
    }

    bool in_active_sublattice(const Idx& k) const {
        for (int i = 0; i < 3; ++i)
            if (!active[std::size_t(i)] && k[i] != 0) return false;
        return true;
    }
};

namespace detail {

inline void validate_element(const SpaceGroup& g, const GroupElement& e) {
    int d = mat_det(e.beta);
    if (d != 1 && d != -1) throw InvalidGroup(g.id + ": lattice action is not unimodular");
    for (const Mat3& q : g.form_x2) {
        Mat3 bt = mat_transpose(e.beta);
        if (mat_mul(bt, mat_mul(q, e.beta)) != q)
            throw InvalidGroup(g.id + ": lattice action does not preserve a scale form");
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!g.active[std::size_t(i)] && g.active[std::size_t(j)] && e.beta[i][j] != 0)
                throw InvalidGroup(g.id + ": lattice action leaves the active sublattice");
}

inline std::vector<GroupElement> close_elements(const std::string& id,
                                                std::vector<GroupElement> gens,
                                                std::size_t cap = 192) {
    std::vector<GroupElement> elems{identity_element()};
    auto known = [&elems](const GroupElement& e) {
        return std::find(elems.begin(), elems.end(), e) != elems.end();
    };
    for (auto g : gens) {
        for (auto& s : g.shift) s = s.mod1();
        if (!known(g)) elems.push_back(g);
    }
    bool grew = true;
    while (grew) {
        grew = false;
        std::size_t n = elems.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                GroupElement p = compose(elems[i], elems[j]);
                if (known(p)) continue;
                if (elems.size() >= cap)
                    throw FormatError(id + ": generator closure exceeds the element cap");
                elems.push_back(p);
                grew = true;
            }
    }
    std::sort(elems.begin(), elems.end());
    return elems;
}

}  // namespace detail

inline SpaceGroup make_group(const std::string& id, Lattice lattice,
                             const std::vector<GroupElement>& generators) {
    SpaceGroup g;
    g.id = id;
    g.lattice = lattice;
    g.J = scale_count(lattice);
    g.active = active_axes(lattice);
    g.form_x2 = delta_forms_x2(lattice);
    g.elements = detail::close_elements(id, generators);
    for (const auto& e : g.elements) detail::validate_element(g, e);
    return g;
}

// Generator file: '#' comments, a "lattice <type>" header, then one line per
// generator with nine integers (row-major beta) and three rational shifts.
inline SpaceGroup load_group(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open group file: " + path);

    std::string stem = path;
    if (auto pos = stem.find_last_of("/\\"); pos != std::string::npos) stem = stem.substr(pos + 1);
    if (auto pos = stem.rfind('.'); pos != std::string::npos && pos > 0) stem = stem.substr(0, pos);

    auto parse_rat = [&](const std::string& tok) {
        std::int64_t num = 0, den = 1;
        std::size_t slash = tok.find('/');
        try {
            num = std::stoll(tok.substr(0, slash));
            if (slash != std::string::npos) den = std::stoll(tok.substr(slash + 1));
        } catch (const std::exception&) {
            throw FormatError(stem + ": bad rational token '" + tok + "'");
        }
        if (den == 0) throw FormatError(stem + ": zero denominator in '" + tok + "'");
        Rat r = Rat(num, den).mod1();
        if (r.q > 12) throw FormatError(stem + ": shift denominator exceeds 12 in '" + tok + "'");
        return r;
    };

    bool have_lattice = false;
    Lattice lattice = Lattice::cubic;
    std::vector<GroupElement> gens;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) toks.push_back(t);
        if (toks.empty()) continue;
        if (toks[0] == "lattice") {
            if (toks.size() != 2)
                throw FormatError(stem + ": line " + std::to_string(lineno) + ": bad lattice header");
            lattice = lattice_from_name(toks[1]);
            have_lattice = true;
            continue;
        }
        if (!have_lattice)
            throw FormatError(stem + ": generator before lattice header (line " +
                              std::to_string(lineno) + ")");
        if (toks.size() != 12)
            throw FormatError(stem + ": line " + std::to_string(lineno) +
                              ": expected 9 integers and 3 shifts");
        GroupElement e;
        for (int i = 0; i < 9; ++i) {
            try {
                std::size_t used = 0;
                int v = std::stoi(toks[std::size_t(i)], &used);
                if (used != toks[std::size_t(i)].size()) throw std::invalid_argument(toks[std::size_t(i)]);
                e.beta[i / 3][i % 3] = v;
            } catch (const std::exception&) {
                throw FormatError(stem + ": line " + std::to_string(lineno) + ": bad integer '" +
                                  toks[std::size_t(i)] + "'");
            }
        }
        for (int i = 0; i < 3; ++i) e.shift[std::size_t(i)] = parse_rat(toks[std::size_t(9 + i)]);
        gens.push_back(e);
    }
    if (!have_lattice) throw FormatError(stem + ": missing lattice header");
    return make_group(stem, lattice, gens);
}

struct OrbitData {
    std::vector<Idx> points;         // unique, lexicographically descending
    std::vector<std::size_t> witness;    // element index g with beta_g(base) = points[i]
    std::vector<std::size_t> stabilizer; // element indices fixing the base point
};

inline OrbitData orbit_and_stabilizer(const SpaceGroup& g, const Idx& k) {
    std::map<Idx, std::size_t> seen;
    OrbitData od;
    for (std::size_t gi = 0; gi < g.elements.size(); ++gi) {
        Idx kk = mat_apply(g.elements[gi].beta, k);
        seen.emplace(kk, gi);
        if (kk == k) od.stabilizer.push_back(gi);
    }
    for (auto it = seen.rbegin(); it != seen.rend(); ++it) {
        od.points.push_back(it->first);
        od.witness.push_back(it->second);
    }
    return od;
}

// Largest orbit element in (k1,k2,k3) lexicographic order: the canonical
// representative of the orbit.
inline Idx canonical_rep(const SpaceGroup& g, const Idx& k) {
    Idx best = k;
    for (const auto& e : g.elements) best = std::max(best, mat_apply(e.beta, k));
    return best;
}

// True iff every stabilizing element acts with phase one on k; modes outside
// this set vanish identically in the symmetry class.
inline bool is_symmetric_index(const SpaceGroup& g, const Idx& k) {
    for (const auto& e : g.elements)
        if (mat_apply(e.beta, k) == k && !alpha(e, k).is_one()) return false;
    return true;
}

struct Mode {
    Idx k{};                          // canonical orbit representative
    long long orbit_size = 1;
    std::vector<long long> delta;     // per-scale form values Delta_k^j
    double knorm = 0.0;
    double omega = 1.0;               // |G.k| nu^knorm, approximate
    Interval omega_iv{1.0};           // rigorous enclosure of the same
    int tau = 0;                      // position of the partner mode rep(-k)
    PhaseAngle phi;                   // phase linking b_{-k} to b_{tau(k)}
    std::vector<Idx> orbit;           // full orbit, lexicographically descending
    std::vector<PhaseAngle> alpha_t;  // phase of orbit[i] relative to the rep
};

struct ReducedIndexSet {
    SpaceGroup group;
    double K = 0.0;
    double nu = 1.0;
    std::vector<double> kappa_bar;
    std::vector<Mode> modes;  // modes[0] is the zero mode
    int N = 0;                // count of nonzero modes

    int index_of(const Idx& k) const {
        auto it = rep_index.find(k);
        return it == rep_index.end() ? -1 : it->second;
    }
    // Any lattice point in the symmetric set -> (mode position, orbit position).
    std::pair<int, int> locate(const Idx& p) const {
        auto it = point_index.find(p);
        return it == point_index.end() ? std::pair<int, int>{-1, -1} : it->second;
    }

    std::map<Idx, int> rep_index;
    std::map<Idx, std::pair<int, int>> point_index;
};

inline ReducedIndexSet build_reduced_set(const SpaceGroup& g, double K,
                                         const std::vector<double>& kappa_bar, double nu) {
    if (kappa_bar.size() != std::size_t(g.J))
        throw DomainError("reduced set: kappa dimension mismatch");
    for (double kj : kappa_bar)
        if (!(kj > 0.0)) throw DomainError("reduced set: kappa must be positive");
    if (!(nu > 1.0)) throw DomainError("reduced set: nu must exceed 1");
    if (!(K > 0.0)) throw DomainError("reduced set: K must be positive");

    ReducedIndexSet rs;
    rs.group = g;
    rs.K = K;
    rs.nu = nu;
    rs.kappa_bar = kappa_bar;

    // Per-axis search bounds: kappa_eff is a lower bound of the form
    // coefficient seen by each axis (3/4 for the hexagonal in-plane form).
    std::array<double, 3> keff{};
    switch (g.lattice) {
        case Lattice::orthorhombic:
            keff = {kappa_bar[0], kappa_bar[1], kappa_bar[2]};
            break;
        case Lattice::tetragonal:
            keff = {kappa_bar[0], kappa_bar[0], kappa_bar[1]};
            break;
        case Lattice::trigonal:
        case Lattice::hexagonal:
            keff = {0.75 * kappa_bar[0], 0.75 * kappa_bar[0], kappa_bar[1]};
            break;
        case Lattice::cubic:
            keff = {kappa_bar[0], kappa_bar[0], kappa_bar[0]};
            break;
        case Lattice::lamellar:
            keff = {kappa_bar[0], 0.0, 0.0};
            break;
        case Lattice::columnar:
            keff = {0.75 * kappa_bar[0], 0.75 * kappa_bar[0], 0.0};
            break;
    }
    std::array<int, 3> lim{};
    for (int i = 0; i < 3; ++i)
        lim[std::size_t(i)] =
            g.active[std::size_t(i)] ? int(std::floor(K / std::sqrt(keff[std::size_t(i)]))) + 1 : 0;

    std::vector<Idx> reps;
    for (int k1 = -lim[0]; k1 <= lim[0]; ++k1)
        for (int k2 = -lim[1]; k2 <= lim[1]; ++k2)
            for (int k3 = -lim[2]; k3 <= lim[2]; ++k3) {
                Idx k{k1, k2, k3};
                if (g.knorm(k, kappa_bar) > K) continue;
                if (canonical_rep(g, k) != k) continue;
                if (!is_symmetric_index(g, k)) continue;
                reps.push_back(k);
            }

    // Deterministic order: by exact form values, then lexicographic; the zero
    // mode sorts first since its form values vanish.
    std::sort(reps.begin(), reps.end(), [&g](const Idx& a, const Idx& b) {
        auto da = g.delta_terms(a), db = g.delta_terms(b);
        if (da != db) return da < db;
        return a < b;
    });

    Interval nu_iv(nu);
    for (const Idx& k : reps) {
        Mode m;
        m.k = k;
        m.delta = g.delta_terms(k);
        m.knorm = g.knorm(k, kappa_bar);
        OrbitData od = orbit_and_stabilizer(g, k);
        m.orbit_size = (long long)od.points.size();
        m.orbit = od.points;
        m.alpha_t.reserve(od.points.size());
        for (std::size_t i = 0; i < od.points.size(); ++i)
            m.alpha_t.push_back(alpha(g.elements[od.witness[i]], k).inverse());
        if (k == Idx{0, 0, 0}) {
            m.omega = 1.0;
            m.omega_iv = Interval(1.0);
        } else {
            m.omega = double(m.orbit_size) * std::pow(nu, m.knorm);
            std::vector<Interval> kb_iv(kappa_bar.begin(), kappa_bar.end());
            Interval d_iv = g.delta(k, kb_iv);
            m.omega_iv = Interval(double(m.orbit_size)) * pow_real(nu_iv, sqrt(d_iv));
        }
        rs.modes.push_back(std::move(m));
    }

    rs.N = int(rs.modes.size()) - 1;
    for (int i = 0; i < int(rs.modes.size()); ++i) {
        rs.rep_index.emplace(rs.modes[std::size_t(i)].k, i);
        for (int j = 0; j < int(rs.modes[std::size_t(i)].orbit.size()); ++j)
            rs.point_index.emplace(rs.modes[std::size_t(i)].orbit[std::size_t(j)],
                                   std::pair<int, int>{i, j});
    }

    // Partner data: tau(k) = rep(-k) and the phase phi linking the mode at -k
    // to the partner coefficient.
    for (auto& m : rs.modes) {
        Idx nk = -m.k;
        auto [mi, oi] = rs.locate(nk);
        if (mi < 0) throw DomainError("reduced set: orbit of -k missing");
        m.tau = mi;
        m.phi = rs.modes[std::size_t(mi)].alpha_t[std::size_t(oi)];
    }
    return rs;
}

// Conjugation on reduced coefficients: (Ib)_k = phi_k b_{tau(k)} conjugated.
// An involution; its fixed points are the coefficient vectors of real fields.
inline std::vector<std::complex<double>> conj_apply(const ReducedIndexSet& rs,
                                                    const std::vector<std::complex<double>>& b) {
    if (b.size() != rs.modes.size()) throw DomainError("conjugation: size mismatch");
    std::vector<std::complex<double>> out(b.size());
    for (std::size_t i = 0; i < rs.modes.size(); ++i) {
        const Mode& m = rs.modes[i];
        out[i] = std::conj(m.phi.value() * b[std::size_t(m.tau)]);
    }
    return out;
}

}  // namespace oksym
