#pragma once

#include <complex>
#include <vector>

namespace pathlink {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to (-pi, pi].
double wrap_phase(double a);

// Dense complex matrix, row-major. All dimensions in this library are small
// (D <= 256), so everything is done with straightforward O(n^3) loops.
struct CMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<cplx> a;

    CMatrix() = default;
    CMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

    static CMatrix identity(int n);

    cplx& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    const cplx& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    bool finite() const;
};

CMatrix matmul(const CMatrix& x, const CMatrix& y);
CMatrix adjoint(const CMatrix& m);
CMatrix conjugate(const CMatrix& m);
CMatrix transpose(const CMatrix& m);
CMatrix tensor(const CMatrix& x, const CMatrix& y);  // Kronecker product
CMatrix add(const CMatrix& x, const CMatrix& y);
CMatrix sub(const CMatrix& x, const CMatrix& y);
CMatrix scale(const CMatrix& m, cplx s);
cplx trace(const CMatrix& m);
std::vector<cplx> matvec(const CMatrix& m, const std::vector<cplx>& v);
double hermiticity_error(const CMatrix& m);          // max_ij |m_ij - conj(m_ji)|
double max_abs_diff(const CMatrix& x, const CMatrix& y);

struct EigResult {
    std::vector<double> values;  // ascending
    CMatrix vectors;             // column k is the eigenvector of values[k]
};

// Cyclic Jacobi eigendecomposition for Hermitian matrices.
// Throws std::invalid_argument if m is not Hermitian within herm_tol.
EigResult eig_hermitian(const CMatrix& m, double herm_tol = 1e-10);

struct PureState {
    int dim = 0;
    std::vector<cplx> amp;
    void validate(double tol = 1e-12) const;  // squared norm within tol of 1
};

enum class Physicality { physical, linear_only };

struct DensityMatrix {
    int dim = 0;
    CMatrix mat;
    Physicality flag = Physicality::physical;

    static DensityMatrix from_pure(const PureState& psi);
    // Hermitian within 1e-10, unit trace within 1e-10; min eigenvalue >= -1e-9
    // when flagged physical. Throws std::runtime_error on violation.
    void validate() const;
};

enum class Subsystem { first, second };

// Pure two-qudit state; amplitude index is n_idler * d + n_signal.
struct BipartiteState {
    int d = 0;
    std::vector<cplx> amp;
    // Populated when the state was built from the correlated (diagonal)
    // construction: amplitude (n,n) = mag_n * exp(i phase_n).
    std::vector<double> mode_magnitudes;
    std::vector<double> mode_phases;

    void validate(double tol = 1e-12) const;
    PureState to_pure() const;
};

PureState bell_state(int d);                       // |Phi+_d| on the joint d^2 space
DensityMatrix density_of(const BipartiteState& psi);
DensityMatrix density_of(const PureState& psi);

// Square root of a PSD Hermitian matrix via eigendecomposition;
// eigenvalues below zero are clamped to zero before the square root.
CMatrix mat_sqrt_psd(const CMatrix& m);

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clamped to [0,1].
// Both inputs must be flagged physical and pass physicality checks.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

// Reduced state of a two-qudit density matrix of local dimension d.
DensityMatrix partial_trace(const DensityMatrix& rho, int d, Subsystem keep);

// Von Neumann entropy of the reduced state, base-d logarithm, in [0,1].
// Eigenvalues <= 1e-14 contribute zero.
double entanglement_entropy(const DensityMatrix& rho, int d);

}  // namespace pathlink
