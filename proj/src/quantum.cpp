// SPDX-License-Identifier: Apache-2.0
#include "qrv/quantum.hpp"

#include <cmath>
#include <random>

#include "qrv/errors.hpp"
#include "qrv/rng.hpp"

namespace qrv::quantum {

std::size_t qubit_count(std::size_t dim) {
  if (dim == 0) throw ArgumentError("dimension must be positive");
  std::size_t n = 0;
  std::size_t d = dim;
  while (d > 1) {
    if (d & 1) throw ArgumentError("dimension is not a power of two");
    d >>= 1;
    ++n;
  }
  return n;
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  DensityMatrix rho;
  rho.dim = static_cast<std::size_t>(psi.size());
  qubit_count(rho.dim);
  rho.matrix = psi * psi.adjoint();
  return rho;
}

DensityCheck check_density(const DensityMatrix& rho) {
  DensityCheck out;
  out.hermiticity_error =
      (rho.matrix - rho.matrix.adjoint()).cwiseAbs().maxCoeff();
  out.trace_error = std::abs(rho.matrix.trace() - std::complex<double>(1.0));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
      ComplexMatrix(0.5 * (rho.matrix + rho.matrix.adjoint())),
      Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  return out;
}

bool is_valid_density(const DensityMatrix& rho, double herm_tol,
                      double trace_tol, double psd_slack) {
  if (rho.dim == 0 || rho.matrix.rows() != static_cast<Eigen::Index>(rho.dim) ||
      rho.matrix.cols() != static_cast<Eigen::Index>(rho.dim)) {
    return false;
  }
  const DensityCheck c = check_density(rho);
  return c.hermiticity_error <= herm_tol && c.trace_error <= trace_tol &&
         c.min_eigenvalue >= -psd_slack;
}

IsingSpec make_ising_spec(std::size_t n_qubits, std::uint64_t coupling_seed,
                          double field_strength) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw SizeError("qubit count must lie in [1, 12]");
  }
  IsingSpec spec;
  spec.n_qubits = n_qubits;
  spec.coupling_seed = coupling_seed;
  spec.field_strength = field_strength;
  spec.couplings = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_qubits),
                                         static_cast<Eigen::Index>(n_qubits));
  std::mt19937_64 gen(coupling_seed);
  for (std::size_t i = 0; i < n_qubits; ++i) {
    for (std::size_t j = i + 1; j < n_qubits; ++j) {
      const double v = uniform_unit(gen);
      spec.couplings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      spec.couplings(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return spec;
}

HermitianOperator build_ising_hamiltonian(const IsingSpec& spec) {
  const std::size_t n = spec.n_qubits;
  if (n < 1 || n > kMaxQubits) {
    throw SizeError("qubit count must lie in [1, 12]");
  }
  if (spec.couplings.rows() != static_cast<Eigen::Index>(n) ||
      spec.couplings.cols() != static_cast<Eigen::Index>(n)) {
    throw ArgumentError("coupling matrix shape does not match qubit count");
  }
  const std::size_t dim = std::size_t(1) << n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  // Z field: diagonal sign sums. Qubit j lives in bit (n-1-j).
  for (std::size_t s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool one = (s >> (n - 1 - j)) & 1u;
      diag += one ? -spec.field_strength : spec.field_strength;
    }
    h(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = diag;
  }
  // X_i X_j couplings flip both bits; i<j single-counted.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double jij = spec.couplings(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j));
      if (jij == 0.0) continue;
      const std::size_t mask =
          (std::size_t(1) << (n - 1 - i)) | (std::size_t(1) << (n - 1 - j));
      for (std::size_t s = 0; s < dim; ++s) {
        h(static_cast<Eigen::Index>(s ^ mask), static_cast<Eigen::Index>(s)) +=
            jij;
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) {
    throw ArgumentError("eigendecomposition failed");
  }
  HermitianOperator op;
  op.dim = dim;
  op.matrix = h.cast<std::complex<double>>();
  op.eigenvalues = es.eigenvalues();
  op.eigenvectors = es.eigenvectors().cast<std::complex<double>>();
  return op;
}

ComplexMatrix propagator(const HermitianOperator& op, double tau) {
  if (!std::isfinite(tau)) throw ArgumentError("evolution time must be finite");
  const Eigen::Index dim = static_cast<Eigen::Index>(op.dim);
  Eigen::VectorXcd phases(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double a = -op.eigenvalues(i) * tau;
    phases(i) = std::complex<double>(std::cos(a), std::sin(a));
  }
  return op.eigenvectors * phases.asDiagonal() * op.eigenvectors.adjoint();
}

StateVector encode_statevector(const std::vector<double>& angles) {
  if (angles.empty()) throw ArgumentError("angle list must be non-empty");
  if (angles.size() > kMaxQubits) {
    throw SizeError("too many qubits for dense simulation");
  }
  StateVector psi(1);
  psi(0) = 1.0;
  for (double x : angles) {
    if (!std::isfinite(x)) throw ArgumentError("angle must be finite");
    const double c = std::cos(0.5 * x);
    const double s = std::sin(0.5 * x);
    StateVector next(psi.size() * 2);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      next(2 * i) = psi(i) * c;
      next(2 * i + 1) = psi(i) * s;
    }
    psi.swap(next);
  }
  return psi;
}

DensityMatrix encode_input(const std::vector<double>& angles) {
  return DensityMatrix::pure(encode_statevector(angles));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  const std::size_t dim = a.dim * b.dim;
  if (dim > (std::size_t(1) << kMaxQubits)) {
    throw SizeError("tensor product exceeds the 12-qubit bound");
  }
  DensityMatrix out;
  out.dim = dim;
  out.matrix.resize(static_cast<Eigen::Index>(dim),
                    static_cast<Eigen::Index>(dim));
  const Eigen::Index da = static_cast<Eigen::Index>(a.dim);
  const Eigen::Index db = static_cast<Eigen::Index>(b.dim);
  for (Eigen::Index i = 0; i < da; ++i) {
    for (Eigen::Index j = 0; j < da; ++j) {
      out.matrix.block(i * db, j * db, db, db) = a.matrix(i, j) * b.matrix;
    }
  }
  return out;
}

DensityMatrix evolve(const DensityMatrix& rho, const ComplexMatrix& unitary) {
  if (unitary.rows() != static_cast<Eigen::Index>(rho.dim) ||
      unitary.cols() != static_cast<Eigen::Index>(rho.dim)) {
    throw ArgumentError("unitary dimension does not match state");
  }
  DensityMatrix out;
  out.dim = rho.dim;
  out.matrix = unitary * rho.matrix * unitary.adjoint();
  return out;
}

DensityMatrix partial_trace_first(const DensityMatrix& rho,
                                  std::size_t n_traced) {
  const std::size_t n = rho.n_qubits();
  if (n_traced >= n) throw ArgumentError("cannot trace out all qubits");
  if (n_traced == 0) return rho;
  const std::size_t keep = n - n_traced;
  const std::size_t dk = std::size_t(1) << keep;
  const std::size_t dt = std::size_t(1) << n_traced;
  DensityMatrix out;
  out.dim = dk;
  out.matrix = ComplexMatrix::Zero(static_cast<Eigen::Index>(dk),
                                   static_cast<Eigen::Index>(dk));
  for (std::size_t a = 0; a < dt; ++a) {
    const Eigen::Index off = static_cast<Eigen::Index>(a * dk);
    out.matrix += rho.matrix.block(off, off, static_cast<Eigen::Index>(dk),
                                   static_cast<Eigen::Index>(dk));
  }
  return out;
}

std::vector<double> pauli_z_expectations(const DensityMatrix& rho) {
  const std::size_t n = rho.n_qubits();
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < rho.dim; ++s) {
    const double p =
        rho.matrix(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s))
            .real();
    for (std::size_t j = 0; j < n; ++j) {
      const bool one = (s >> (n - 1 - j)) & 1u;
      out[j] += one ? -p : p;
    }
  }
  return out;
}

}  // namespace qrv::quantum
