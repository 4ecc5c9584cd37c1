#include "pathlink/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pathlink {

double wrap_phase(double a) {
    double w = std::fmod(a + kPi, 2.0 * kPi);
    if (w <= 0.0) w += 2.0 * kPi;
    return w - kPi;
}

CMatrix CMatrix::identity(int n) {
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool CMatrix::finite() const {
    for (const cplx& z : a)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

CMatrix matmul(const CMatrix& x, const CMatrix& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul: dimension mismatch");
    CMatrix r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const cplx xik = x(i, k);
            if (xik == cplx(0.0, 0.0)) continue;
            for (int j = 0; j < y.cols; ++j) r(i, j) += xik * y(k, j);
        }
    return r;
}

CMatrix adjoint(const CMatrix& m) {
    CMatrix r(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r(j, i) = std::conj(m(i, j));
    return r;
}

CMatrix conjugate(const CMatrix& m) {
    CMatrix r = m;
    for (cplx& z : r.a) z = std::conj(z);
    return r;
}

CMatrix transpose(const CMatrix& m) {
    CMatrix r(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r(j, i) = m(i, j);
    return r;
}

CMatrix tensor(const CMatrix& x, const CMatrix& y) {
    CMatrix r(x.rows * y.rows, x.cols * y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) {
            const cplx xij = x(i, j);
            if (xij == cplx(0.0, 0.0)) continue;
            for (int k = 0; k < y.rows; ++k)
                for (int l = 0; l < y.cols; ++l)
                    r(i * y.rows + k, j * y.cols + l) = xij * y(k, l);
        }
    return r;
}

CMatrix add(const CMatrix& x, const CMatrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("add: dimension mismatch");
    CMatrix r = x;
    for (size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
    return r;
}

CMatrix sub(const CMatrix& x, const CMatrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("sub: dimension mismatch");
    CMatrix r = x;
    for (size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
    return r;
}

CMatrix scale(const CMatrix& m, cplx s) {
    CMatrix r = m;
    for (cplx& z : r.a) z *= s;
    return r;
}

cplx trace(const CMatrix& m) {
    cplx t = 0.0;
    for (int i = 0; i < std::min(m.rows, m.cols); ++i) t += m(i, i);
    return t;
}

std::vector<cplx> matvec(const CMatrix& m, const std::vector<cplx>& v) {
    if (m.cols != static_cast<int>(v.size())) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<cplx> r(m.rows, cplx(0.0, 0.0));
    for (int i = 0; i < m.rows; ++i) {
        cplx s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

double hermiticity_error(const CMatrix& m) {
    if (m.rows != m.cols) return std::numeric_limits<double>::infinity();
    double e = 0.0;
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j)
            e = std::max(e, std::abs(m(i, j) - std::conj(m(j, i))));
    return e;
}

double max_abs_diff(const CMatrix& x, const CMatrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) return std::numeric_limits<double>::infinity();
    double e = 0.0;
    for (size_t i = 0; i < x.a.size(); ++i) e = std::max(e, std::abs(x.a[i] - y.a[i]));
    return e;
}

// -------------------------------------------------------------------------
// Cyclic Jacobi for complex Hermitian matrices. A 2x2 unitary rotation
//   J = [[c, s e^{i phi}], [-s e^{-i phi}, c]]
// zeroes the (p,q) element each step; V accumulates the eigenvectors.
// -------------------------------------------------------------------------
EigResult eig_hermitian(const CMatrix& m, double herm_tol) {
    if (m.rows != m.cols) throw std::invalid_argument("eig_hermitian: matrix not square");
    if (!m.finite()) throw std::invalid_argument("eig_hermitian: non-finite entries");
    if (hermiticity_error(m) > herm_tol) throw std::invalid_argument("eig_hermitian: matrix not Hermitian");

    const int n = m.rows;
    // work on the symmetrised matrix to suppress roundoff asymmetry
    CMatrix A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
    CMatrix V = CMatrix::identity(n);

    double scale = 0.0;
    for (const cplx& z : A.a) scale = std::max(scale, std::abs(z));
    if (scale == 0.0) scale = 1.0;
    const double stop = 1e-15 * scale;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(A(p, q)));
        if (off <= stop) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const cplx apq = A(p, q);
                const double g = std::abs(apq);
                if (g <= stop * 1e-2) continue;
                const double app = A(p, p).real();
                const double aqq = A(q, q).real();
                const double tau = (aqq - app) / (2.0 * g);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const cplx eph = apq / g;  // e^{i phi}

                // rows/columns p and q of A: A <- J^dag A J
                for (int k = 0; k < n; ++k) {
                    const cplx akp = A(k, p);
                    const cplx akq = A(k, q);
                    A(k, p) = c * akp - s * std::conj(eph) * akq;
                    A(k, q) = s * eph * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const cplx apk = A(p, k);
                    const cplx aqk = A(q, k);
                    A(p, k) = c * apk - s * eph * aqk;
                    A(q, k) = s * std::conj(eph) * apk + c * aqk;
                }
                A(p, q) = 0.0;
                A(q, p) = 0.0;
                A(p, p) = cplx(A(p, p).real(), 0.0);
                A(q, q) = cplx(A(q, q).real(), 0.0);

                for (int k = 0; k < n; ++k) {
                    const cplx vkp = V(k, p);
                    const cplx vkq = V(k, q);
                    V(k, p) = c * vkp - s * std::conj(eph) * vkq;
                    V(k, q) = s * eph * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return A(i, i).real() < A(j, j).real(); });

    EigResult r;
    r.values.resize(n);
    r.vectors = CMatrix(n, n);
    for (int k = 0; k < n; ++k) {
        r.values[k] = A(order[k], order[k]).real();
        for (int i = 0; i < n; ++i) r.vectors(i, k) = V(i, order[k]);
    }
    return r;
}

void PureState::validate(double tol) const {
    if (static_cast<int>(amp.size()) != dim) throw std::runtime_error("PureState: size mismatch");
    double n2 = 0.0;
    for (const cplx& z : amp) n2 += std::norm(z);
    if (std::abs(n2 - 1.0) > tol) throw std::runtime_error("PureState: not normalized");
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
    psi.validate();
    DensityMatrix rho;
    rho.dim = psi.dim;
    rho.mat = CMatrix(psi.dim, psi.dim);
    for (int i = 0; i < psi.dim; ++i)
        for (int j = 0; j < psi.dim; ++j) rho.mat(i, j) = psi.amp[i] * std::conj(psi.amp[j]);
    return rho;
}

void DensityMatrix::validate() const {
    if (mat.rows != dim || mat.cols != dim) throw std::runtime_error("DensityMatrix: shape mismatch");
    if (!mat.finite()) throw std::runtime_error("DensityMatrix: non-finite entries");
    if (hermiticity_error(mat) > 1e-10) throw std::runtime_error("DensityMatrix: not Hermitian");
    if (std::abs(trace(mat) - cplx(1.0, 0.0)) > 1e-10) throw std::runtime_error("DensityMatrix: trace not 1");
    if (flag == Physicality::physical) {
        EigResult e = eig_hermitian(mat);
        if (e.values.front() < -1e-9) throw std::runtime_error("DensityMatrix: not positive semi-definite");
    }
}

void BipartiteState::validate(double tol) const {
    if (static_cast<int>(amp.size()) != d * d) throw std::runtime_error("BipartiteState: size mismatch");
    double n2 = 0.0;
    for (const cplx& z : amp) n2 += std::norm(z);
    if (std::abs(n2 - 1.0) > tol) throw std::runtime_error("BipartiteState: not normalized");
}

PureState BipartiteState::to_pure() const {
    return PureState{d * d, amp};
}

PureState bell_state(int d) {
    if (d < 1) throw std::invalid_argument("bell_state: d must be positive");
    PureState psi;
    psi.dim = d * d;
    psi.amp.assign(static_cast<size_t>(d) * d, cplx(0.0, 0.0));
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    for (int n = 0; n < d; ++n) psi.amp[static_cast<size_t>(n) * d + n] = a;
    return psi;
}

DensityMatrix density_of(const BipartiteState& psi) {
    return DensityMatrix::from_pure(psi.to_pure());
}

DensityMatrix density_of(const PureState& psi) {
    return DensityMatrix::from_pure(psi);
}

CMatrix mat_sqrt_psd(const CMatrix& m) {
    EigResult e = eig_hermitian(m);
    const int n = m.rows;
    CMatrix r(n, n);
    for (int k = 0; k < n; ++k) {
        const double lam = std::max(e.values[k], 0.0);
        const double s = std::sqrt(lam);
        if (s == 0.0) continue;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                r(i, j) += s * e.vectors(i, k) * std::conj(e.vectors(j, k));
    }
    return r;
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim != sigma.dim) throw std::invalid_argument("fidelity: dimension mismatch");
    if (rho.flag != Physicality::physical || sigma.flag != Physicality::physical)
        throw std::invalid_argument("fidelity: inputs must be physical");
    rho.validate();
    sigma.validate();

    const CMatrix sr = mat_sqrt_psd(rho.mat);
    CMatrix inner = matmul(matmul(sr, sigma.mat), sr);
    // re-Hermitise against roundoff before taking the square root
    CMatrix h(inner.rows, inner.cols);
    for (int i = 0; i < inner.rows; ++i)
        for (int j = 0; j < inner.cols; ++j) h(i, j) = 0.5 * (inner(i, j) + std::conj(inner(j, i)));
    EigResult e = eig_hermitian(h);
    double t = 0.0;
    for (double lam : e.values) t += std::sqrt(std::max(lam, 0.0));
    return std::clamp(t * t, 0.0, 1.0);
}

DensityMatrix partial_trace(const DensityMatrix& rho, int d, Subsystem keep) {
    if (rho.dim != d * d) throw std::invalid_argument("partial_trace: dimension is not d^2");
    DensityMatrix r;
    r.dim = d;
    r.mat = CMatrix(d, d);
    r.flag = rho.flag;
    if (keep == Subsystem::first) {
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) {
                cplx s = 0.0;
                for (int j = 0; j < d; ++j) s += rho.mat(i * d + j, k * d + j);
                r.mat(i, k) = s;
            }
    } else {
        for (int j = 0; j < d; ++j)
            for (int l = 0; l < d; ++l) {
                cplx s = 0.0;
                for (int i = 0; i < d; ++i) s += rho.mat(i * d + j, i * d + l);
                r.mat(j, l) = s;
            }
    }
    return r;
}

double entanglement_entropy(const DensityMatrix& rho, int d) {
    if (rho.dim != d * d) throw std::invalid_argument("entanglement_entropy: dimension is not d^2");
    DensityMatrix ra = partial_trace(rho, d, Subsystem::first);
    EigResult e = eig_hermitian(ra.mat);
    double s = 0.0;
    for (double lam : e.values) {
        if (lam <= 1e-14) continue;
        s -= lam * std::log(lam);
    }
    return std::clamp(s / std::log(static_cast<double>(d)), 0.0, 1.0);
}

}  // namespace pathlink
