#include "pathlink/bases.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace pathlink {

namespace {

// Fix each row's global phase: first entry above threshold made real positive.
void fix_row_phases(CMatrix& b) {
    for (int r = 0; r < b.rows; ++r) {
        int nz = -1;
        for (int c = 0; c < b.cols; ++c)
            if (std::abs(b(r, c)) > 1e-10) { nz = c; break; }
        if (nz < 0) continue;
        const cplx ph = std::conj(b(r, nz)) / std::abs(b(r, nz));
        for (int c = 0; c < b.cols; ++c) {
            b(r, c) *= ph;
            // snap roundoff dust so serialized bases are clean
            if (std::abs(b(r, c).real()) < 1e-14) b(r, c) = cplx(0.0, b(r, c).imag());
            if (std::abs(b(r, c).imag()) < 1e-14) b(r, c) = cplx(b(r, c).real(), 0.0);
        }
    }
}

// ---- GF(4) arithmetic: elements {0,1,2,3} ~ {0, 1, w, w^2}, w^2 = w + 1. ----
// Addition is XOR on the 2-bit representation; multiplication and the trace
// map GF(4)->GF(2) (tr x = x + x^2) are tabulated below.
constexpr int kGf4Mul[4][4] = {
    {0, 0, 0, 0},
    {0, 1, 2, 3},
    {0, 2, 3, 1},
    {0, 3, 1, 2},
};
constexpr int kGf4Trace[4] = {0, 0, 1, 1};

CMatrix gf4_shift(int x) {  // X(x): |v> -> |v + x>
    CMatrix m(4, 4);
    for (int v = 0; v < 4; ++v) m(v ^ x, v) = 1.0;
    return m;
}

CMatrix gf4_phase(int y) {  // Z(y): |v> -> (-1)^{tr(y v)} |v>
    CMatrix m(4, 4);
    for (int v = 0; v < 4; ++v) m(v, v) = kGf4Trace[kGf4Mul[y][v]] ? -1.0 : 1.0;
    return m;
}

CMatrix make_hermitian_class_op(int x, int a) {
    CMatrix m = matmul(gf4_shift(x), gf4_phase(kGf4Mul[a][x]));
    if (hermiticity_error(m) < 1e-12) return m;
    return scale(m, cplx(0.0, 1.0));  // squares to -1; i M is Hermitian
}

// Joint eigenbasis of the commuting class {X(x) Z(a x)}: diagonalise the
// operator for x=1, then the x=w operator restricted to each 2-fold eigenspace.
CMatrix gf4_class_basis(int a) {
    const CMatrix o1 = make_hermitian_class_op(1, a);
    const CMatrix o2 = make_hermitian_class_op(2, a);
    const EigResult e1 = eig_hermitian(o1);
    CMatrix basis(4, 4);
    int row = 0;
    for (double lam : {1.0, -1.0}) {
        std::vector<int> idx;
        for (int k = 0; k < 4; ++k)
            if (std::abs(e1.values[k] - lam) < 1e-8) idx.push_back(k);
        if (idx.size() != 2) throw std::runtime_error("mub_set: unexpected GF(4) class spectrum");
        // 2x2 restriction of o2 onto the eigenspace spanned by columns idx
        CMatrix w(4, 2);
        for (int i = 0; i < 4; ++i)
            for (int c = 0; c < 2; ++c) w(i, c) = e1.vectors(i, idx[c]);
        const CMatrix r = matmul(adjoint(w), matmul(o2, w));
        const EigResult e2 = eig_hermitian(r, 1e-8);
        for (int c = 1; c >= 0; --c) {  // descending eigenvalue of o2
            for (int i = 0; i < 4; ++i)
                basis(row, i) = w(i, 0) * e2.vectors(0, c) + w(i, 1) * e2.vectors(1, c);
            ++row;
        }
    }
    return basis;
}

}  // namespace

void MUBSet::validate(double tol) const {
    if (static_cast<int>(bases.size()) != d + 1) throw std::runtime_error("MUBSet: wrong basis count");
    for (const CMatrix& b : bases) {
        const CMatrix g = matmul(b, adjoint(b));
        if (max_abs_diff(g, CMatrix::identity(d)) > tol)
            throw std::runtime_error("MUBSet: basis not unitary");
    }
    for (size_t m = 0; m < bases.size(); ++m)
        for (size_t m2 = m + 1; m2 < bases.size(); ++m2) {
            // overlap of kets: |<e|e'>|^2 = |(B conj(B'^T))|^2 entries
            const CMatrix o = matmul(bases[m], adjoint(bases[m2]));
            for (const cplx& z : o.a)
                if (std::abs(std::norm(z) - 1.0 / d) > tol)
                    throw std::runtime_error("MUBSet: bases not mutually unbiased");
        }
}

MUBSet mub_set(int d) {
    MUBSet set;
    set.d = d;
    set.bases.push_back(CMatrix::identity(d));
    if (d == 2) {
        CMatrix x(2, 2), y(2, 2);
        const double s = 1.0 / std::sqrt(2.0);
        x(0, 0) = s; x(0, 1) = s;           // |+>
        x(1, 0) = s; x(1, 1) = -s;          // |->
        y(0, 0) = s; y(0, 1) = cplx(0, s);  // |+i>, sigma_Y eigenvalue +1
        y(1, 0) = s; y(1, 1) = cplx(0, -s);
        set.bases.push_back(x);
        set.bases.push_back(y);
    } else if (d == 3 || d == 5) {
        // odd prime: basis a has kets (1/sqrt d) sum_k w^{a k^2 + n k} |k>
        for (int a = 0; a < d; ++a) {
            CMatrix b(d, d);
            for (int n = 0; n < d; ++n)
                for (int k = 0; k < d; ++k)
                    b(n, k) = std::polar(1.0 / std::sqrt(static_cast<double>(d)),
                                         2.0 * kPi * ((a * k * k + n * k) % d) / d);
            set.bases.push_back(b);
        }
    } else if (d == 4) {
        for (int a = 0; a < 4; ++a) set.bases.push_back(gf4_class_basis(a));
    } else {
        throw std::invalid_argument("mub_set: unsupported dimension " + std::to_string(d) +
                                    " (supported: 2, 3, 4, 5)");
    }
    for (CMatrix& b : set.bases) fix_row_phases(b);
    set.validate();
    return set;
}

std::vector<const CMatrix*> OperatorSet::all() const {
    std::vector<const CMatrix*> v;
    for (const CMatrix& m : symmetric) v.push_back(&m);
    for (const CMatrix& m : antisymmetric) v.push_back(&m);
    for (const CMatrix& m : diagonal) v.push_back(&m);
    return v;
}

void OperatorSet::validate(double tol) const {
    const auto ops = all();
    if (static_cast<int>(ops.size()) != d * d - 1)
        throw std::runtime_error("OperatorSet: wrong operator count");
    for (size_t i = 0; i < ops.size(); ++i) {
        if (hermiticity_error(*ops[i]) > tol) throw std::runtime_error("OperatorSet: not Hermitian");
        if (std::abs(trace(*ops[i])) > tol) throw std::runtime_error("OperatorSet: not traceless");
        for (size_t j = 0; j < ops.size(); ++j) {
            const cplx t = trace(matmul(*ops[i], *ops[j]));
            const double expected = (i == j) ? 2.0 : 0.0;
            if (std::abs(t - expected) > tol)
                throw std::runtime_error("OperatorSet: trace orthogonality violated");
        }
    }
}

OperatorSet gellmann_ops(int d) {
    if (d < 2) throw std::invalid_argument("gellmann_ops: d must be >= 2");
    OperatorSet set;
    set.d = d;
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
            CMatrix s(d, d), a(d, d);
            s(j, k) = 1.0;
            s(k, j) = 1.0;
            a(j, k) = cplx(0.0, -1.0);
            a(k, j) = cplx(0.0, 1.0);
            set.symmetric.push_back(s);
            set.antisymmetric.push_back(a);
        }
    for (int l = 0; l <= d - 2; ++l) {
        CMatrix m(d, d);
        const double norm = std::sqrt(2.0 / ((l + 1.0) * (l + 2.0)));
        for (int j = 0; j <= l; ++j) m(j, j) = norm;
        m(l + 1, l + 1) = -norm * (l + 1.0);
        set.diagonal.push_back(m);
    }
    return set;
}

bool verify_two_mode_support(const OperatorSet& ops, double tol) {
    for (const CMatrix* op : ops.all()) {
        const int n = op->rows;
        const EigResult e = eig_hermitian(*op, 1e-10);
        int k = 0;
        while (k < n) {
            int k2 = k;
            while (k2 + 1 < n && std::abs(e.values[k2 + 1] - e.values[k]) < 1e-8) ++k2;
            const int mult = k2 - k + 1;
            bool handled = false;
            if (mult > 1) {
                // degenerate eigenspace: its projector is diagonal for the
                // generalized Pauli families, so it is spanned by
                // computational-basis states (the appendix's choice).
                CMatrix proj(n, n);
                for (int c = k; c <= k2; ++c)
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j)
                            proj(i, j) += e.vectors(i, c) * std::conj(e.vectors(j, c));
                bool diag = true;
                for (int i = 0; i < n && diag; ++i)
                    for (int j = 0; j < n; ++j)
                        if (i != j && std::abs(proj(i, j)) > tol) { diag = false; break; }
                if (diag) handled = true;  // single-mode representatives
            }
            if (!handled) {
                for (int c = k; c <= k2; ++c) {
                    int support = 0;
                    for (int i = 0; i < n; ++i)
                        if (std::abs(e.vectors(i, c)) > tol) ++support;
                    if (support > 2) return false;
                }
            }
            k = k2 + 1;
        }
    }
    return true;
}

MeasurementCounts measurement_counts(int d, int n_particles) {
    if (d < 2 || n_particles < 1) throw std::invalid_argument("measurement_counts: bad arguments");
    auto ipow = [](std::uint64_t base, int e) {
        std::uint64_t r = 1;
        for (int i = 0; i < e; ++i) r *= base;
        return r;
    };
    MeasurementCounts c;
    c.local_mub = ipow(static_cast<std::uint64_t>(d) + 1, n_particles);
    c.gellmann = ipow(static_cast<std::uint64_t>(d) * d - 1, n_particles);
    c.joint_mub = ipow(static_cast<std::uint64_t>(d), n_particles) + 1;
    return c;
}

int projector_index(int m, int n, int d) {
    if (n < 0 || n >= d) throw std::invalid_argument("projector_index: state index out of range");
    if (m < 0) throw std::invalid_argument("projector_index: negative basis index");
    return n + m * d;
}

std::pair<int, int> projector_index_decode(int p, int d) {
    if (p < 0 || d < 1) throw std::invalid_argument("projector_index_decode: bad arguments");
    return {p / d, p % d};
}

namespace {

nlohmann::json matrix_to_json(const CMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols; ++j)
            row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

std::string mub_set_to_json(const MUBSet& set) {
    nlohmann::json j;
    j["d"] = set.d;
    j["bases"] = nlohmann::json::array();
    for (const CMatrix& b : set.bases) j["bases"].push_back(matrix_to_json(b));
    return j.dump(2);
}

std::string operator_set_to_json(const OperatorSet& set) {
    nlohmann::json j;
    j["d"] = set.d;
    for (const char* key : {"symmetric", "antisymmetric", "diagonal"}) j[key] = nlohmann::json::array();
    for (const CMatrix& m : set.symmetric) j["symmetric"].push_back(matrix_to_json(m));
    for (const CMatrix& m : set.antisymmetric) j["antisymmetric"].push_back(matrix_to_json(m));
    for (const CMatrix& m : set.diagonal) j["diagonal"].push_back(matrix_to_json(m));
    return j.dump(2);
}

}  // namespace pathlink
