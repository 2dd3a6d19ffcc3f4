#pragma once

// Data model for snapshot data and identified reduced models.
//
// Matrices are dense, column-major doubles. One column of a snapshot matrix is
// one full system state; the input matrix carries one column per transition,
// so it always has exactly one column fewer than the snapshot matrix.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace romid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Throws NumericalError naming `what` if any entry is NaN or Inf.
void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what);

namespace matstore {

/// A contiguous block of state rows belonging to one physical field.
struct FieldSpan {
    std::string name;
    Index begin = 0;
    Index count = 0;

    bool operator==(const FieldSpan&) const = default;
};

/// x = shift + scale * z for every row of one field.
struct FieldScaling {
    double shift = 0.0;
    double scale = 1.0;

    bool operator==(const FieldScaling&) const = default;
};

/// Per-field affine normalization, one entry per field of the layout.
struct NormSpec {
    std::vector<FieldScaling> fields;

    bool operator==(const NormSpec&) const = default;
};

/// Throws DimensionMismatch unless the spans tile rows [0, rows) in order.
void validate_layout(const std::vector<FieldSpan>& layout, Index rows);

/// Maps original coordinates to normalized ones, column by column.
Matrix normalize(const NormSpec& spec, const std::vector<FieldSpan>& layout,
                 const Eigen::Ref<const Matrix>& x);
/// Inverse of normalize().
Matrix denormalize(const NormSpec& spec, const std::vector<FieldSpan>& layout,
                   const Eigen::Ref<const Matrix>& z);

class SnapshotSet {
public:
    SnapshotSet(Matrix states, Matrix inputs, double dt_sample,
                std::vector<FieldSpan> layout = {},
                std::optional<NormSpec> norm = std::nullopt);

    const Matrix& states() const { return states_; }
    const Matrix& inputs() const { return inputs_; }
    double dt_sample() const { return dt_sample_; }
    const std::vector<FieldSpan>& layout() const { return layout_; }
    const std::optional<NormSpec>& norm_spec() const { return norm_; }

    Index state_dim() const { return states_.rows(); }
    Index snapshot_count() const { return states_.cols(); }
    Index input_dim() const { return inputs_.rows(); }

    /// States mapped back to original units (a copy of states() if not normalized).
    Matrix original_states() const;

private:
    Matrix states_;
    Matrix inputs_;
    double dt_sample_;
    std::vector<FieldSpan> layout_;
    std::optional<NormSpec> norm_;
};

enum class Method { DMDc, OMDc };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// Reduced model a_{k+1} = M a_k + P u_k, x_k ≈ L a_k with orthonormal L.
class RomModel {
public:
    RomModel(Matrix modes, Matrix system, Matrix input, Method method,
             double dt_sample, std::optional<NormSpec> norm = std::nullopt,
             std::vector<FieldSpan> layout = {});

    const Matrix& modes() const { return modes_; }    // L, n × r
    const Matrix& system() const { return system_; }  // M, r × r
    const Matrix& input() const { return input_; }    // P, r × p
    Method method() const { return method_; }
    double dt_sample() const { return dt_sample_; }
    const std::optional<NormSpec>& norm_spec() const { return norm_; }
    const std::vector<FieldSpan>& layout() const { return layout_; }

    Index state_dim() const { return modes_.rows(); }
    Index rank() const { return modes_.cols(); }
    Index input_dim() const { return input_.cols(); }

private:
    Matrix modes_;
    Matrix system_;
    Matrix input_;
    Method method_;
    double dt_sample_;
    std::optional<NormSpec> norm_;
    std::vector<FieldSpan> layout_;
};

/// X = columns 0..m-2, Y = columns 1..m-1.
std::pair<Matrix, Matrix> split_snapshots(const Eigen::Ref<const Matrix>& S);

/// Ω = [X; U].
Matrix stack_omega(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& U);

/// Shifts each field by its mean and scales by its population standard
/// deviation over all snapshots (scales below 1e-14 are replaced by 1).
/// An existing normalization is composed with the new one.
SnapshotSet normalize_fields(const SnapshotSet& set);

}  // namespace matstore
}  // namespace romid
