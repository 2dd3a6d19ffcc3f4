#include "romid/decomp.hpp"

#include "romid/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace romid::decomp {

namespace {

// Index of the first entry of largest magnitude.
Index dominant_entry(const Eigen::Ref<const Vector>& v) {
    Index best = 0;
    v.cwiseAbs().maxCoeff(&best);
    return best;
}

ThinSvd full_svd(const Eigen::Ref<const Matrix>& A) {
    if (A.size() == 0) throw DimensionMismatch("SVD of an empty matrix");
    require_finite(A, "SVD input");
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
    ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV(), 0};
    for (Index j = 0; j < out.U.cols(); ++j) {
        if (out.U(dominant_entry(out.U.col(j)), j) < 0.0) {
            out.U.col(j) *= -1.0;
            out.V.col(j) *= -1.0;
        }
    }
    return out;
}

Index numerical_rank(const Vector& sigma, double rtol) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    const double cut = rtol * sigma(0);
    Index d = 0;
    while (d < sigma.size() && sigma(d) > cut) ++d;
    return d;
}

}  // namespace

double default_rtol(Index rows, Index cols) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

ThinSvd thin_svd(const Eigen::Ref<const Matrix>& A, std::optional<double> rtol) {
    const double tol = rtol.value_or(default_rtol(A.rows(), A.cols()));
    if (tol < 0.0) throw RangeError("rank tolerance must be nonnegative");
    ThinSvd svd = full_svd(A);
    const Index d = numerical_rank(svd.sigma, tol);
    svd.U = svd.U.leftCols(d).eval();
    svd.V = svd.V.leftCols(d).eval();
    svd.sigma = svd.sigma.head(d).eval();
    svd.rank = d;
    return svd;
}

ThinSvd thin_svd_untruncated(const Eigen::Ref<const Matrix>& A) {
    ThinSvd svd = full_svd(A);
    svd.rank = numerical_rank(svd.sigma, default_rtol(A.rows(), A.cols()));
    return svd;
}

ThinQr thin_qr(const Eigen::Ref<const Matrix>& A) {
    const Index a = A.rows();
    const Index b = A.cols();
    if (a < b) {
        throw DimensionMismatch("thin QR needs a tall or square matrix, got " + std::to_string(a) + "×" +
                                std::to_string(b));
    }
    if (b == 0) throw DimensionMismatch("thin QR of a matrix without columns");
    require_finite(A, "QR input");
    Eigen::HouseholderQR<Matrix> qr(A);
    ThinQr out;
    out.Q = qr.householderQ() * Matrix::Identity(a, b);
    out.R = qr.matrixQR().topRows(b).triangularView<Eigen::Upper>();
    for (Index j = 0; j < b; ++j) {
        if (out.Q(dominant_entry(out.Q.col(j)), j) < 0.0) {
            out.Q.col(j) *= -1.0;
            out.R.row(j) *= -1.0;
        }
    }
    return out;
}

Matrix pseudo_inverse(const Eigen::Ref<const Matrix>& A, std::optional<double> rtol) {
    const ThinSvd svd = thin_svd(A, rtol);
    return svd.V * svd.sigma.cwiseInverse().asDiagonal() * svd.U.transpose();
}

Matrix solve_ls(const Eigen::Ref<const Matrix>& Y, const Eigen::Ref<const Matrix>& omega,
                std::optional<double> rtol) {
    if (Y.cols() != omega.cols()) {
        throw DimensionMismatch("least squares: Y has " + std::to_string(Y.cols()) + " columns, Ω has " +
                                std::to_string(omega.cols()));
    }
    const ThinSvd svd = thin_svd(omega, rtol);
    return ((Y * svd.V) * svd.sigma.cwiseInverse().asDiagonal()) * svd.U.transpose();
}

}  // namespace romid::decomp
