#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathlink/linalg.hpp"

namespace pathlink {

// d+1 mutually unbiased orthonormal bases. Basis 0 is the computational
// basis, basis 1 the Fourier/Hadamard-type basis; row n of each basis matrix
// holds the components of the ket |e_{m,n}>, with the first nonzero entry of
// every row made real positive.
struct MUBSet {
    int d = 0;
    std::vector<CMatrix> bases;

    // measurement amplitudes for |psi> in basis m are (conj(basis) * psi)
    CMatrix measurement_unitary(int m) const { return conjugate(bases[m]); }
    void validate(double tol = 1e-10) const;
};

// The d^2-1 generalized Pauli (Gell-Mann) operators: d(d-1)/2 symmetric,
// d(d-1)/2 anti-symmetric, d-1 diagonal, normalised so Tr(A_i A_j) = 2 delta_ij.
struct OperatorSet {
    int d = 0;
    std::vector<CMatrix> symmetric;
    std::vector<CMatrix> antisymmetric;
    std::vector<CMatrix> diagonal;

    std::vector<const CMatrix*> all() const;
    void validate(double tol = 1e-12) const;
};

// Supported dimensions: 2, 3, 5 (prime) and 4 (GF(4) construction).
// Throws std::invalid_argument for anything else.
MUBSet mub_set(int d);

OperatorSet gellmann_ops(int d);

// True iff every eigenvector of every operator has at most two amplitudes
// above tol, after rotating degenerate eigenspaces to the computational basis
// where the eigenspace projector is diagonal.
bool verify_two_mode_support(const OperatorSet& ops, double tol);

struct MeasurementCounts {
    std::uint64_t local_mub = 0;  // (d+1)^N
    std::uint64_t gellmann = 0;   // (d^2-1)^N
    std::uint64_t joint_mub = 0;  // d^N + 1
};

MeasurementCounts measurement_counts(int d, int n_particles);

// p = n + m d for basis m and state n within the basis
int projector_index(int m, int n, int d);
std::pair<int, int> projector_index_decode(int p, int d);  // (m, n)

// JSON with matrices as nested [re, im] arrays, for cross-implementation checks.
std::string mub_set_to_json(const MUBSet& set);
std::string operator_set_to_json(const OperatorSet& set);

}  // namespace pathlink
