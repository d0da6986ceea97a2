#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "eitsim/errors.hpp"

// Operators and states on the truncated two-level x N-Fock Hilbert space.
//
// Basis ordering is qubit-major: index = q * n_fock + n with q in {0 = g, 1 = e}
// and n the Fock index. So for n_fock = 2 the basis reads
// |g,0>, |g,1>, |e,0>, |e,1>.

namespace eitsim {

using OperatorMatrix = Eigen::MatrixXcd;
using DensityMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr int kMaxKronDim = 64;

inline int basis_index(int qubit, int fock, int n_fock) {
    return qubit * n_fock + fock;
}

/// Kronecker product, dim = dim_A * dim_B. Guarded against blowing past the
/// configured maximum total dimension.
inline OperatorMatrix kron(const OperatorMatrix& a, const OperatorMatrix& b,
                           int max_dim = kMaxKronDim) {
    const Eigen::Index dim = a.rows() * b.rows();
    if (dim > max_dim) {
        throw DimensionError("kron: result dimension " + std::to_string(dim) +
                             " exceeds maximum " + std::to_string(max_dim));
    }
    OperatorMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline void require_fock(int n_fock, const char* who) {
    if (n_fock < 2) {
        throw DimensionError(std::string(who) + ": n_fock must be >= 2, got " +
                             std::to_string(n_fock));
    }
}

/// sigma (x) I_{n_fock}: the qubit lowering operator |g><e| on the full space.
inline OperatorMatrix qubit_lowering(int n_fock) {
    require_fock(n_fock, "qubit_lowering");
    OperatorMatrix sigma = OperatorMatrix::Zero(2, 2);
    sigma(0, 1) = 1.0; // row g, col e
    return kron(sigma, OperatorMatrix::Identity(n_fock, n_fock));
}

/// I_2 (x) a: truncated annihilation operator, sqrt(n) on the superdiagonal.
inline OperatorMatrix resonator_lowering(int n_fock) {
    require_fock(n_fock, "resonator_lowering");
    OperatorMatrix a = OperatorMatrix::Zero(n_fock, n_fock);
    for (int n = 1; n < n_fock; ++n) a(n - 1, n) = std::sqrt(double(n));
    return kron(OperatorMatrix::Identity(2, 2), a);
}

/// Tr(rho * op).
inline Complex expectation(const DensityMatrix& rho, const OperatorMatrix& op) {
    if (rho.rows() != op.rows() || rho.cols() != op.cols()) {
        throw DimensionError("expectation: dimension mismatch " +
                             std::to_string(rho.rows()) + " vs " +
                             std::to_string(op.rows()));
    }
    return (rho * op).trace();
}

inline bool is_hermitian(const OperatorMatrix& m, double tol = 1e-12) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff() < tol;
}

/// Ground state |g,0><g,0| on the truncated space.
inline DensityMatrix ground_state(int n_fock) {
    require_fock(n_fock, "ground_state");
    DensityMatrix rho = DensityMatrix::Zero(2 * n_fock, 2 * n_fock);
    rho(0, 0) = 1.0;
    return rho;
}

struct DensityCheck {
    bool ok = true;
    std::string reason;
};

/// Single validation routine used by tests of every downstream module:
/// trace ~ 1, Hermitian, positive semidefinite up to tolerance.
inline DensityCheck check_density_matrix(const DensityMatrix& rho,
                                         double trace_tol = 1e-9,
                                         double herm_tol = 1e-12,
                                         double eig_tol = -1e-9) {
    DensityCheck c;
    const Complex tr = rho.trace();
    if (std::abs(tr.real() - 1.0) > trace_tol) {
        return {false, "trace real part deviates from 1 by " +
                       std::to_string(tr.real() - 1.0)};
    }
    if (std::abs(tr.imag()) > 1e-12) {
        return {false, "trace has imaginary part " + std::to_string(tr.imag())};
    }
    if (!is_hermitian(rho, herm_tol)) return {false, "not Hermitian"};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < eig_tol) {
        return {false, "minimum eigenvalue " +
                       std::to_string(es.eigenvalues().minCoeff())};
    }
    return c;
}

inline void validate_density_matrix(const DensityMatrix& rho) {
    const DensityCheck c = check_density_matrix(rho);
    if (!c.ok) throw DomainError("invalid density matrix: " + c.reason);
}

} // namespace eitsim
