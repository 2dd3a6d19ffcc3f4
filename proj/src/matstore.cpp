#include "romid/matstore.hpp"

#include "romid/errors.hpp"

#include <cmath>
#include <string>

namespace romid {

void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what) {
    if (!m.allFinite()) {
        throw NumericalError(std::string(what) + " contains NaN or Inf");
    }
}

namespace matstore {

void validate_layout(const std::vector<FieldSpan>& layout, Index rows) {
    Index next = 0;
    for (const auto& f : layout) {
        if (f.begin != next || f.count <= 0) {
            throw DimensionMismatch("field '" + f.name + "' does not continue the row partition at row " +
                                    std::to_string(next));
        }
        next += f.count;
    }
    if (!layout.empty() && next != rows) {
        throw DimensionMismatch("field layout covers " + std::to_string(next) + " rows, state has " +
                                std::to_string(rows));
    }
}

namespace {

void check_spec(const NormSpec& spec, const std::vector<FieldSpan>& layout, Index rows) {
    if (spec.fields.size() != layout.size() || layout.empty()) {
        throw DimensionMismatch("normalization needs one scaling per field of a nonempty layout");
    }
    validate_layout(layout, rows);
}

}  // namespace

Matrix normalize(const NormSpec& spec, const std::vector<FieldSpan>& layout,
                 const Eigen::Ref<const Matrix>& x) {
    check_spec(spec, layout, x.rows());
    Matrix z(x.rows(), x.cols());
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& f = layout[i];
        const auto& s = spec.fields[i];
        z.middleRows(f.begin, f.count) = (x.middleRows(f.begin, f.count).array() - s.shift) / s.scale;
    }
    return z;
}

Matrix denormalize(const NormSpec& spec, const std::vector<FieldSpan>& layout,
                   const Eigen::Ref<const Matrix>& z) {
    check_spec(spec, layout, z.rows());
    Matrix x(z.rows(), z.cols());
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& f = layout[i];
        const auto& s = spec.fields[i];
        x.middleRows(f.begin, f.count) = z.middleRows(f.begin, f.count).array() * s.scale + s.shift;
    }
    return x;
}

SnapshotSet::SnapshotSet(Matrix states, Matrix inputs, double dt_sample,
                         std::vector<FieldSpan> layout, std::optional<NormSpec> norm)
    : states_(std::move(states)),
      inputs_(std::move(inputs)),
      dt_sample_(dt_sample),
      layout_(std::move(layout)),
      norm_(std::move(norm)) {
    if (states_.rows() < 1 || states_.cols() < 1) {
        throw DimensionMismatch("snapshot matrix must be nonempty");
    }
    if (inputs_.cols() + 1 != states_.cols()) {
        throw DimensionMismatch("input matrix needs exactly one column fewer than the snapshot matrix (" +
                                std::to_string(inputs_.cols()) + " vs " + std::to_string(states_.cols()) +
                                ")");
    }
    if (!(dt_sample_ > 0.0) || !std::isfinite(dt_sample_)) {
        throw RangeError("sampling interval must be positive");
    }
    require_finite(states_, "snapshot matrix");
    require_finite(inputs_, "input matrix");
    validate_layout(layout_, states_.rows());
    if (norm_) {
        check_spec(*norm_, layout_, states_.rows());
    }
}

Matrix SnapshotSet::original_states() const {
    return norm_ ? denormalize(*norm_, layout_, states_) : states_;
}

std::string_view to_string(Method m) {
    return m == Method::DMDc ? "dmdc" : "omdc";
}

Method method_from_string(std::string_view s) {
    if (s == "dmdc" || s == "DMDc") return Method::DMDc;
    if (s == "omdc" || s == "OMDc") return Method::OMDc;
    throw FormatError("unknown method '" + std::string(s) + "'");
}

RomModel::RomModel(Matrix modes, Matrix system, Matrix input, Method method, double dt_sample,
                   std::optional<NormSpec> norm, std::vector<FieldSpan> layout)
    : modes_(std::move(modes)),
      system_(std::move(system)),
      input_(std::move(input)),
      method_(method),
      dt_sample_(dt_sample),
      norm_(std::move(norm)),
      layout_(std::move(layout)) {
    const Index r = modes_.cols();
    if (r < 1 || r > modes_.rows()) {
        throw DimensionMismatch("mode matrix must be n × r with 1 ≤ r ≤ n");
    }
    if (system_.rows() != r || system_.cols() != r || input_.rows() != r) {
        throw DimensionMismatch("system/input matrices do not match the mode count");
    }
    require_finite(modes_, "mode matrix");
    require_finite(system_, "system matrix");
    require_finite(input_, "input matrix");
    const double drift = (modes_.transpose() * modes_ - Matrix::Identity(r, r)).norm();
    if (drift > 1e-10) {
        throw NumericalError("mode matrix is not orthonormal (‖LᵀL − I‖ = " + std::to_string(drift) + ")");
    }
    validate_layout(layout_, modes_.rows());
    if (norm_) {
        check_spec(*norm_, layout_, modes_.rows());
    }
}

std::pair<Matrix, Matrix> split_snapshots(const Eigen::Ref<const Matrix>& S) {
    const Index m = S.cols();
    if (m < 2) {
        throw InsufficientSnapshots("need at least two snapshots, got " + std::to_string(m));
    }
    return {S.leftCols(m - 1), S.rightCols(m - 1)};
}

Matrix stack_omega(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& U) {
    if (X.cols() != U.cols()) {
        throw DimensionMismatch("X has " + std::to_string(X.cols()) + " columns, U has " +
                                std::to_string(U.cols()));
    }
    Matrix omega(X.rows() + U.rows(), X.cols());
    omega.topRows(X.rows()) = X;
    omega.bottomRows(U.rows()) = U;
    return omega;
}

SnapshotSet normalize_fields(const SnapshotSet& set) {
    // Without a layout the whole state is one field.
    const std::vector<FieldSpan> layout =
        set.layout().empty() ? std::vector<FieldSpan>{{"state", 0, set.state_dim()}} : set.layout();
    const Matrix& S = set.states();
    NormSpec spec;
    Matrix z(S.rows(), S.cols());
    for (const auto& f : layout) {
        const auto block = S.middleRows(f.begin, f.count);
        const double count = static_cast<double>(block.size());
        const double mean = block.sum() / count;
        const double var = (block.array() - mean).square().sum() / count;
        double scale = std::sqrt(var);
        if (scale < 1e-14) scale = 1.0;
        z.middleRows(f.begin, f.count) = (block.array() - mean) / scale;
        spec.fields.push_back({mean, scale});
    }
    if (const auto& prior = set.norm_spec()) {
        for (std::size_t i = 0; i < spec.fields.size(); ++i) {
            const auto& outer = prior->fields[i];
            auto& inner = spec.fields[i];
            inner = {outer.shift + outer.scale * inner.shift, outer.scale * inner.scale};
        }
    }
    return SnapshotSet(std::move(z), set.inputs(), set.dt_sample(), layout, std::move(spec));
}

}  // namespace matstore
}  // namespace romid
