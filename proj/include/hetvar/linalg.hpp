#pragma once

#include <Eigen/Dense>

namespace hetvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Reciprocal condition estimate below which a solve is deemed singular (cond > 1e12).
inline constexpr double kMinRcond = 1e-12;

Matrix kron(const Matrix& a, const Matrix& b);

/// Column-major stacking of the columns of `m`.
Vector vec(const Matrix& m);

/// Inverse of vec: reshape a length rows*cols vector column-major.
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double max_asymmetry(const Matrix& m);

/// Symmetric square root via eigendecomposition. Eigenvalues with |λ| < 1e-14 are
/// clamped to zero; a clearly negative eigenvalue throws NotPositiveDefiniteError.
Matrix sym_sqrt(const Matrix& m);

/// Symmetric inverse square root; eigenvalues are floored at `floor`.
Matrix sym_inv_sqrt(const Matrix& m, double floor = 1e-12);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& m);

/// Solve `a x = b` for symmetric `a` using a pivoted LDLT factorization. Throws
/// SingularMatrixError when the reciprocal condition estimate is below kMinRcond.
Matrix solve_symmetric(const Matrix& a, const Matrix& b);

/// Inverse of a symmetric matrix, same singularity rule as solve_symmetric.
Matrix inverse_symmetric(const Matrix& a);

/// Inverse of an SPD matrix via Cholesky; throws NotPositiveDefiniteError otherwise.
Matrix inverse_spd(const Matrix& a);

bool is_spd(const Matrix& m);

}  // namespace linalg
}  // namespace hetvar
