#pragma once

// Optimal mode decomposition with control.
//
// Minimizes ‖Y − L M Lᵀ X − L P U‖²_F over orthonormal L (n × r), M and P.
// For fixed L the optimal P and M are available in closed form, which leaves
// a cost F(L) on the Grassmann manifold:
//
//   Q  = I − Uᵀ(UUᵀ)⁻¹U          (input-deflating projector)
//   X̂ = XQ,  Ŷ = YQ
//   M* = LᵀŶX̂ᵀL (LᵀX̂X̂ᵀL)⁻¹
//   P* = (LᵀY − M LᵀX) Uᵀ(UUᵀ)⁻¹
//   F  = ‖(I − LLᵀ)Y + LLᵀŶ − L M* LᵀX̂‖²_F
//
// With S = Q̄R̄ (thin QR) every quantity can be evaluated on the m-row
// coordinates X̄, Ȳ of R̄, so a CG iteration costs O(m²r) regardless of n.

#include "romid/grassmann.hpp"
#include "romid/matstore.hpp"

#include <optional>

namespace romid::omdc {

/// Cached, immutable products of (X, Y, U) used by every evaluation.
///
/// The input projector is applied through a thin QR of Uᵀ = Q_u R_u, so that
/// Uᵀ(UUᵀ)⁻¹U = Q_u Q_uᵀ and YUᵀ(UUᵀ)⁻¹UYᵀ = Z Zᵀ with Z = Y Q_u.
class OmdcData {
public:
    /// Throws InputRankError if cond(UUᵀ) exceeds 1e12.
    OmdcData(Matrix X, Matrix Y, Matrix U);

    const Matrix& X() const { return X_; }
    const Matrix& Y() const { return Y_; }
    const Matrix& U() const { return U_; }
    const Matrix& X_hat() const { return X_hat_; }
    const Matrix& Y_hat() const { return Y_hat_; }
    const Matrix& Y_input() const { return Y_input_; }  // Z = Y Q_u
    const Matrix& X_input() const { return X_input_; }  // X Q_u
    const Matrix& input_R() const { return input_R_; }  // R_u, UUᵀ = R_uᵀ R_u
    double y_norm2() const { return y_norm2_; }

    Index rows() const { return X_.rows(); }
    Index transitions() const { return X_.cols(); }
    Index input_dim() const { return U_.rows(); }

    /// Q = I − Uᵀ(UUᵀ)⁻¹U, (m−1) × (m−1).
    Matrix projector() const;
    Matrix gram_yx() const { return Y_hat_ * X_hat_.transpose(); }  // ŶX̂ᵀ
    Matrix gram_xx() const { return X_hat_ * X_hat_.transpose(); }  // X̂X̂ᵀ
    Matrix input_term() const { return Y_input_ * Y_input_.transpose(); }  // YUᵀ(UUᵀ)⁻¹UYᵀ

private:
    Matrix X_;
    Matrix Y_;
    Matrix U_;
    Matrix input_Q_;
    Matrix input_R_;
    Matrix X_hat_;
    Matrix Y_hat_;
    Matrix Y_input_;
    Matrix X_input_;
    double y_norm2_ = 0.0;
};

inline constexpr double kMaxGramCondition = 1e12;

/// P* for given L and M.
Matrix optimal_P(const Eigen::Ref<const Matrix>& L, const Eigen::Ref<const Matrix>& M, const OmdcData& data);

/// M* for given L; throws ProjectedRankError if cond(LᵀX̂X̂ᵀL) > 1e12.
Matrix optimal_M(const Eigen::Ref<const Matrix>& L, const OmdcData& data);

/// F(L) with M and P eliminated.
double cost_F(const Eigen::Ref<const Matrix>& L, const OmdcData& data);

/// Componentwise derivative ∂F/∂L.
Matrix grad_F(const Eigen::Ref<const Matrix>& L, const OmdcData& data);

/// F(L, M, P) evaluated directly from the residual; works for any (M, P),
/// e.g. to score a DMDc model with the same objective.
double residual_cost(const Eigen::Ref<const Matrix>& L, const Eigen::Ref<const Matrix>& M,
                     const Eigen::Ref<const Matrix>& P, const OmdcData& data);

/// Cost/gradient pair used inside the optimizer. When LᵀX̂X̂ᵀL becomes
/// ill-conditioned along the path it adds λI, λ = 1e-12·tr(·)/r, instead of
/// failing, and counts the event.
class RidgedObjective {
public:
    explicit RidgedObjective(const OmdcData& data) : data_(&data) {}
    double cost(const Matrix& L) const;
    Matrix gradient(const Matrix& L) const;
    int ridge_events() const { return ridge_events_; }

private:
    const OmdcData* data_;
    mutable int ridge_events_ = 0;
};

/// OMDc data expressed in the coordinates of the thin QR of S.
struct ReducedProblem {
    Matrix Q_bar;  // n × m
    Matrix R_bar;  // m × m
    OmdcData data;  // built from X̄ = R̄[:, 0..m−2], Ȳ = R̄[:, 1..m−1]
};

/// Requires n ≥ m (throws DimensionMismatch otherwise).
ReducedProblem reduce_problem(const Eigen::Ref<const Matrix>& S, const Eigen::Ref<const Matrix>& U);

struct OmdcOptions {
    grassmann::CgOptions cg;
    /// Gradient tolerance relative to ‖Y‖²_F (the gradient is quadratic in the data).
    double grad_tol_rel = 1e-10;
    /// Use the QR-reduced formulation when n ≥ m.
    bool use_reduction = true;
    /// Start from this basis (n × r, orthonormal) instead of the leading
    /// left singular vectors of the snapshot data.
    std::optional<Matrix> initial_basis;
};

struct OmdcResult {
    matstore::RomModel model;
    grassmann::CgReport report;
    double final_cost = 0.0;
    int ridge_events = 0;
    bool reduced = false;
};

/// Identifies (L, M, P) of rank r from a snapshot set; requires 1 ≤ r < rank S.
OmdcResult omdc_identify(const matstore::SnapshotSet& snap, Index r, const OmdcOptions& opts = {});

}  // namespace romid::omdc
