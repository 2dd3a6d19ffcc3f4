#include "romid/romsim.hpp"

#include "romid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace romid::romsim {

using matstore::FieldSpan;
using matstore::RomModel;

namespace {

// Minimum-cost perfect assignment (Hungarian method, O(n³)); returns the
// column assigned to each row.
std::vector<Index> assign(const Matrix& cost) {
    const Index n = cost.rows();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<Index> p(n + 1, 0), way(n + 1, 0);
    for (Index i = 1; i <= n; ++i) {
        p[0] = i;
        Index j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const Index i0 = p[j0];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const Index j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Index> row_to_col(n);
    for (Index j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

// Row means of L restricted to each field, one row per field.
Matrix field_row_means(const Matrix& L, const std::vector<FieldSpan>& layout) {
    Matrix w(static_cast<Index>(layout.size()), L.cols());
    for (std::size_t i = 0; i < layout.size(); ++i) {
        w.row(static_cast<Index>(i)) =
            L.middleRows(layout[i].begin, layout[i].count).colwise().sum() / static_cast<double>(layout[i].count);
    }
    return w;
}

}  // namespace

Vector RomTrajectory::times() const {
    return Vector::LinSpaced(states.cols(), 0.0, dt * static_cast<double>(states.cols() - 1));
}

std::vector<FieldSpan> effective_layout(const std::vector<FieldSpan>& layout, Index rows) {
    if (!layout.empty()) return layout;
    return {FieldSpan{"state", 0, rows}};
}

Vector project(const RomModel& model, const Eigen::Ref<const Vector>& x) {
    if (x.size() != model.state_dim()) throw DimensionMismatch("state vector has the wrong length");
    if (model.norm_spec()) {
        const Matrix z = matstore::normalize(*model.norm_spec(), model.layout(), x);
        return model.modes().transpose() * z;
    }
    return model.modes().transpose() * x;
}

Vector lift(const RomModel& model, const Eigen::Ref<const Vector>& a) {
    if (a.size() != model.rank()) throw DimensionMismatch("reduced vector has the wrong length");
    const Vector z = model.modes() * a;
    if (model.norm_spec()) return matstore::denormalize(*model.norm_spec(), model.layout(), z);
    return z;
}

RomTrajectory rom_simulate(const RomModel& model, const Eigen::Ref<const Vector>& x0,
                           const Eigen::Ref<const Matrix>& inputs) {
    if (inputs.rows() != model.input_dim() && inputs.cols() > 0) {
        throw DimensionMismatch("input sequence has " + std::to_string(inputs.rows()) + " rows, model expects " +
                                std::to_string(model.input_dim()));
    }
    require_finite(inputs, "input sequence");
    RomTrajectory traj;
    traj.dt = model.dt_sample();
    traj.states.resize(model.rank(), inputs.cols() + 1);
    traj.states.col(0) = project(model, x0);
    const Matrix& M = model.system();
    const Matrix& P = model.input();
    for (Index k = 0; k < inputs.cols(); ++k) {
        traj.states.col(k + 1).noalias() = M * traj.states.col(k) + P * inputs.col(k);
    }
    return traj;
}

Spectrum eigenvalues(const Eigen::Ref<const Matrix>& M) {
    if (M.rows() != M.cols()) throw DimensionMismatch("eigenvalues of a non-square matrix");
    require_finite(M, "system matrix");
    Spectrum s;
    if (M.rows() == 0) return s;
    Eigen::EigenSolver<Matrix> es(M, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
    auto& v = s.values;
    v.assign(es.eigenvalues().begin(), es.eigenvalues().end());
    std::sort(v.begin(), v.end(), [](auto a, auto b) { return std::abs(a) > std::abs(b); });
    // Conjugate pairs have equal magnitude up to rounding; order each tie group by phase.
    std::size_t start = 0;
    while (start < v.size()) {
        std::size_t end = start + 1;
        const double ref = std::abs(v[start]);
        while (end < v.size() && ref - std::abs(v[end]) <= 1e-12 * std::max(1.0, ref)) ++end;
        std::sort(v.begin() + static_cast<std::ptrdiff_t>(start), v.begin() + static_cast<std::ptrdiff_t>(end),
                  [](auto a, auto b) { return std::arg(a) < std::arg(b); });
        start = end;
    }
    return s;
}

double matching_distance(const Spectrum& a, const Spectrum& b) {
    if (a.values.size() != b.values.size()) throw DimensionMismatch("spectra differ in length");
    const auto n = static_cast<Index>(a.values.size());
    if (n == 0) return 0.0;
    Matrix dist(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) dist(i, j) = std::abs(a.values[i] - b.values[j]);
    }
    const auto pairing = assign(dist);
    double worst = 0.0;
    for (Index i = 0; i < n; ++i) worst = std::max(worst, dist(i, pairing[i]));
    return worst;
}

Matrix field_means(const RomModel& model, const RomTrajectory& traj) {
    if (traj.states.rows() != model.rank()) throw DimensionMismatch("trajectory rank differs from the model");
    const auto layout = effective_layout(model.layout(), model.state_dim());
    Matrix means = field_row_means(model.modes(), layout) * traj.states;
    if (const auto& spec = model.norm_spec()) {
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const auto& s = spec->fields[i];
            means.row(static_cast<Index>(i)) = (means.row(static_cast<Index>(i)).array() * s.scale + s.shift).matrix();
        }
    }
    return means;
}

Matrix field_means(const std::vector<FieldSpan>& layout, const Eigen::Ref<const Matrix>& states) {
    const auto eff = effective_layout(layout, states.rows());
    matstore::validate_layout(eff, states.rows());
    Matrix means(static_cast<Index>(eff.size()), states.cols());
    for (std::size_t i = 0; i < eff.size(); ++i) {
        means.row(static_cast<Index>(i)) =
            states.middleRows(eff[i].begin, eff[i].count).colwise().sum() / static_cast<double>(eff[i].count);
    }
    return means;
}

Comparison compare(const RomModel& model, const RomTrajectory& traj, const matstore::SnapshotSet& reference) {
    if (traj.states.cols() != reference.snapshot_count() ||
        std::abs(traj.dt - reference.dt_sample()) > 1e-12 * reference.dt_sample()) {
        throw DimensionMismatch("time grid mismatch: trajectory has " + std::to_string(traj.states.cols()) +
                                " samples at dt " + std::to_string(traj.dt) + ", reference " +
                                std::to_string(reference.snapshot_count()) + " at dt " +
                                std::to_string(reference.dt_sample()));
    }
    if (model.state_dim() != reference.state_dim()) throw DimensionMismatch("model and reference state dimensions differ");
    const auto layout = effective_layout(reference.layout(), reference.state_dim());

    Comparison c;
    c.times = traj.times();
    c.rom_means = field_means(model, traj);
    c.ref_means = field_means(reference.layout(), reference.original_states());
    if (c.rom_means.rows() != c.ref_means.rows()) throw DimensionMismatch("model and reference field layouts differ");
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto row = static_cast<Index>(i);
        const Vector diff = (c.rom_means.row(row) - c.ref_means.row(row)).transpose();
        const double ref_rms = std::sqrt(c.ref_means.row(row).squaredNorm() / static_cast<double>(diff.size()));
        const double err_rms = std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
        c.fields.push_back(layout[i].name);
        c.metrics.push_back({layout[i].name, ref_rms > 0.0 ? err_rms / ref_rms : err_rms, diff.cwiseAbs().maxCoeff()});
    }
    return c;
}

}  // namespace romid::romsim
