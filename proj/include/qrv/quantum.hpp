// SPDX-License-Identifier: Apache-2.0
//
// Dense simulation primitives for small qubit systems: Ising Hamiltonian
// construction, unitary propagation, density matrices, partial traces and
// Pauli-Z expectations.
//
// Qubit ordering convention: qubit 0 is the leftmost (most significant)
// tensor factor, i.e. basis index s encodes qubit j in bit (n-1-j). Input
// qubits of the reservoir occupy the first factors, hidden qubits the last.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace qrv::quantum {

using ComplexMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr std::size_t kMaxQubits = 12;

std::size_t qubit_count(std::size_t dim);  // throws unless dim is a power of two

// Hermitian unit-trace matrix describing a (possibly mixed) quantum state.
struct DensityMatrix {
  std::size_t dim = 0;
  ComplexMatrix matrix;

  std::size_t n_qubits() const { return qubit_count(dim); }
  static DensityMatrix pure(const StateVector& psi);
};

// Deviations from the DensityMatrix invariants, for validation and tests.
struct DensityCheck {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double trace_error = 0.0;        // |tr(rho) - 1|
  double min_eigenvalue = 0.0;
};

DensityCheck check_density(const DensityMatrix& rho);
bool is_valid_density(const DensityMatrix& rho, double herm_tol = 1e-10,
                      double trace_tol = 1e-10, double psd_slack = 1e-9);

// Hermitian operator with its eigendecomposition precomputed, so that
// propagators for many evolution times reuse one factorization.
struct HermitianOperator {
  std::size_t dim = 0;
  ComplexMatrix matrix;
  Eigen::VectorXd eigenvalues;
  ComplexMatrix eigenvectors;  // orthonormal columns
};

// Fully connected transverse-field Ising couplings. Each J_ij for i<j is
// drawn i.i.d. Uniform[0,1] from mt19937_64(coupling_seed), filled in
// row-major order over i<j; the matrix is symmetric with zero diagonal.
struct IsingSpec {
  std::size_t n_qubits = 0;
  std::uint64_t coupling_seed = 0;
  double field_strength = 1.0;
  Eigen::MatrixXd couplings;
};

IsingSpec make_ising_spec(std::size_t n_qubits, std::uint64_t coupling_seed,
                          double field_strength = 1.0);

// H = sum_{i<j} J_ij X_i X_j + v sum_i Z_i, with the eigendecomposition
// computed eagerly. n_qubits must lie in [1, 12].
HermitianOperator build_ising_hamiltonian(const IsingSpec& spec);

// U = V diag(exp(-i lambda tau)) V^dagger from the cached decomposition.
ComplexMatrix propagator(const HermitianOperator& op, double tau);

// Product state of one qubit per angle, each rotated around Y from |0>:
// cos(x/2)|0> + sin(x/2)|1>.
StateVector encode_statevector(const std::vector<double>& angles);
DensityMatrix encode_input(const std::vector<double>& angles);

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

DensityMatrix evolve(const DensityMatrix& rho, const ComplexMatrix& unitary);

// Reduced state of the trailing qubits after summing out the first n_traced
// tensor factors. n_traced must be strictly less than the qubit count.
DensityMatrix partial_trace_first(const DensityMatrix& rho,
                                  std::size_t n_traced);

// <Z_j> = Tr[rho Z_j] for every qubit, via diagonal sign contraction.
std::vector<double> pauli_z_expectations(const DensityMatrix& rho);

}  // namespace qrv::quantum
