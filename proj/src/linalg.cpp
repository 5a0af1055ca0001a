#include "hetvar/linalg.hpp"

#include <cmath>

#include "hetvar/error.hpp"

namespace hetvar::linalg {

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) {
        throw InvalidArgument("unvec: size mismatch");
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

double max_asymmetry(const Matrix& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

Matrix sym_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
    Vector lambda = eig.eigenvalues();
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (std::abs(lambda(i)) < 1e-14) {
            lambda(i) = 0.0;
        } else if (lambda(i) < -1e-12 * scale) {
            throw NotPositiveDefiniteError("sym_sqrt: matrix has a negative eigenvalue");
        } else if (lambda(i) < 0.0) {
            lambda(i) = 0.0;
        }
    }
    const Matrix& v = eig.eigenvectors();
    return v * lambda.cwiseSqrt().asDiagonal() * v.transpose();
}

Matrix sym_inv_sqrt(const Matrix& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
    Vector lambda = eig.eigenvalues().cwiseMax(floor);
    const Matrix& v = eig.eigenvectors();
    return v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
}

double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

Matrix solve_symmetric(const Matrix& a, const Matrix& b) {
    Eigen::LDLT<Matrix> ldlt(a);
    const Vector pivots = ldlt.vectorD().cwiseAbs();
    const double largest = pivots.size() ? pivots.maxCoeff() : 0.0;
    if (ldlt.info() != Eigen::Success || !(largest > 0.0) ||
        !(pivots.minCoeff() >= kMinRcond * largest) || !(ldlt.rcond() >= kMinRcond)) {
        throw SingularMatrixError("linear system is numerically singular");
    }
    return ldlt.solve(b);
}

Matrix inverse_symmetric(const Matrix& a) {
    return solve_symmetric(a, Matrix::Identity(a.rows(), a.cols()));
}

Matrix inverse_spd(const Matrix& a) {
    Eigen::LLT<Matrix> llt(symmetrize(a));
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("matrix is not positive definite");
    }
    return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

bool is_spd(const Matrix& m) {
    if (m.rows() != m.cols() || !m.allFinite()) {
        return false;
    }
    Eigen::LLT<Matrix> llt(symmetrize(m));
    return llt.info() == Eigen::Success;
}

}  // namespace hetvar::linalg
