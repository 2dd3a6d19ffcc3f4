#pragma once

// Dense factorizations: thin SVD with rank truncation, thin QR, and the
// minimum-norm least-squares solve built on the pseudo-inverse.
//
// Sign convention: in every U (SVD) and Q (QR) column the entry of largest
// magnitude is nonnegative; V columns and R rows are flipped to match.

#include "romid/matstore.hpp"

#include <optional>

namespace romid::decomp {

struct ThinSvd {
    Matrix U;      // a × d
    Vector sigma;  // d values, nonincreasing
    Matrix V;      // b × d
    Index rank = 0;
};

struct ThinQr {
    Matrix Q;  // a × b
    Matrix R;  // b × b, upper triangular
};

/// max(a, b) · machine epsilon.
double default_rtol(Index rows, Index cols);

/// Keeps the singular triplets with σ > rtol·σ₁.
ThinSvd thin_svd(const Eigen::Ref<const Matrix>& A, std::optional<double> rtol = std::nullopt);

/// All min(a, b) singular triplets; `rank` is still the numerical rank at the default tolerance.
ThinSvd thin_svd_untruncated(const Eigen::Ref<const Matrix>& A);

/// Requires a ≥ b.
ThinQr thin_qr(const Eigen::Ref<const Matrix>& A);

/// Ω⁺ = V Σ⁻¹ Uᵀ from the truncated thin SVD.
Matrix pseudo_inverse(const Eigen::Ref<const Matrix>& A, std::optional<double> rtol = std::nullopt);

/// Minimum-norm minimizer of ‖Y − GΩ‖_F, G = YΩ⁺.
Matrix solve_ls(const Eigen::Ref<const Matrix>& Y, const Eigen::Ref<const Matrix>& omega,
                std::optional<double> rtol = std::nullopt);

}  // namespace romid::decomp
