#pragma once

// Dynamic mode decomposition with control.
//
// The full-order operators come from the pseudo-inverse of Ω = [X; U]:
//   Ã = Y Ṽ Σ̃⁻¹ Φ̃₁ᵀ,  B̃ = Y Ṽ Σ̃⁻¹ Φ̃₂ᵀ
// where Φ̃₁ / Φ̃₂ are the state / input row blocks of the left singular
// vectors of Ω. The reduced model projects onto the leading r left singular
// vectors Φ̂ᵣ of Y.

#include "romid/matstore.hpp"

#include <optional>

namespace romid::dmdc {

/// Ã is never formed densely: it is held as (YṼΣ̃⁻¹)·Φ̃₁ᵀ.
class DmdcFull {
public:
    DmdcFull(Matrix left_factor, Matrix phi_state, Matrix phi_input);

    /// Ã·x for one or more column vectors.
    Matrix apply_A(const Eigen::Ref<const Matrix>& x) const;
    /// Dense Ã; n × n, only sensible for small n.
    Matrix dense_A() const;
    const Matrix& B() const { return B_; }

    const Matrix& left_factor() const { return left_factor_; }  // Y Ṽ Σ̃⁻¹, n × d
    const Matrix& phi_state() const { return phi_state_; }      // Φ̃₁, n × d
    const Matrix& phi_input() const { return phi_input_; }      // Φ̃₂, p × d
    Index rank() const { return left_factor_.cols(); }

private:
    Matrix left_factor_;
    Matrix phi_state_;
    Matrix phi_input_;
    Matrix B_;
};

struct DmdcReduced {
    Matrix A_hat;  // r × r
    Matrix B_hat;  // r × p
    Matrix Phi_r;  // n × r
    Index r = 0;
};

DmdcFull dmdc_full(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& Y,
                   const Eigen::Ref<const Matrix>& U, std::optional<double> rtol = std::nullopt);

/// Throws RankError if r exceeds the numerical rank of Y.
DmdcReduced dmdc_reduced(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& Y,
                         const Eigen::Ref<const Matrix>& U, Index r,
                         std::optional<double> rtol = std::nullopt);

matstore::RomModel dmdc_as_rom(const DmdcReduced& d, double dt_sample,
                               std::optional<matstore::NormSpec> norm = std::nullopt,
                               std::vector<matstore::FieldSpan> layout = {});

}  // namespace romid::dmdc
