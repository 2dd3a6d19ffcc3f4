#include "romid/dmdc.hpp"

#include "romid/decomp.hpp"
#include "romid/errors.hpp"

#include <string>

namespace romid::dmdc {

namespace {

void check_shapes(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& Y,
                  const Eigen::Ref<const Matrix>& U) {
    if (X.rows() != Y.rows() || X.cols() != Y.cols() || U.cols() != X.cols()) {
        throw DimensionMismatch("DMDc needs X, Y of equal shape and U with matching column count");
    }
    if (X.rows() < 1 || U.rows() < 1 || X.cols() < 1) {
        throw DimensionMismatch("DMDc needs n ≥ 1, p ≥ 1 and at least one transition");
    }
}

}  // namespace

DmdcFull::DmdcFull(Matrix left_factor, Matrix phi_state, Matrix phi_input)
    : left_factor_(std::move(left_factor)),
      phi_state_(std::move(phi_state)),
      phi_input_(std::move(phi_input)),
      B_(left_factor_ * phi_input_.transpose()) {}

Matrix DmdcFull::apply_A(const Eigen::Ref<const Matrix>& x) const {
    if (x.rows() != phi_state_.rows()) throw DimensionMismatch("Ã·x: wrong state dimension");
    return left_factor_ * (phi_state_.transpose() * x);
}

Matrix DmdcFull::dense_A() const {
    return left_factor_ * phi_state_.transpose();
}

DmdcFull dmdc_full(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& Y,
                   const Eigen::Ref<const Matrix>& U, std::optional<double> rtol) {
    check_shapes(X, Y, U);
    const Index n = X.rows();
    const Index p = U.rows();
    const decomp::ThinSvd svd = decomp::thin_svd(matstore::stack_omega(X, U), rtol);
    Matrix left = (Y * svd.V) * svd.sigma.cwiseInverse().asDiagonal();
    return DmdcFull(std::move(left), svd.U.topRows(n), svd.U.bottomRows(p));
}

DmdcReduced dmdc_reduced(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& Y,
                         const Eigen::Ref<const Matrix>& U, Index r, std::optional<double> rtol) {
    check_shapes(X, Y, U);
    if (r < 1) throw RankError("reduced rank must be at least 1");
    const Index n = X.rows();
    const Index p = U.rows();

    const decomp::ThinSvd omega = decomp::thin_svd(matstore::stack_omega(X, U), rtol);
    const decomp::ThinSvd out = decomp::thin_svd(Y, rtol);
    if (r > out.rank) {
        throw RankError("requested rank " + std::to_string(r) + " exceeds rank Y = " + std::to_string(out.rank));
    }

    DmdcReduced d;
    d.r = r;
    d.Phi_r = out.U.leftCols(r);
    // Σ̂ᵣ V̂ᵣᵀ Ṽ Σ̃⁻¹, shared by both reduced operators
    const Matrix core = (out.sigma.head(r).asDiagonal() * (out.V.leftCols(r).transpose() * omega.V)) *
                        omega.sigma.cwiseInverse().asDiagonal();
    d.A_hat = core * (omega.U.topRows(n).transpose() * d.Phi_r);
    d.B_hat = core * omega.U.bottomRows(p).transpose();
    return d;
}

matstore::RomModel dmdc_as_rom(const DmdcReduced& d, double dt_sample, std::optional<matstore::NormSpec> norm,
                               std::vector<matstore::FieldSpan> layout) {
    return matstore::RomModel(d.Phi_r, d.A_hat, d.B_hat, matstore::Method::DMDc, dt_sample, std::move(norm),
                              std::move(layout));
}

}  // namespace romid::dmdc
