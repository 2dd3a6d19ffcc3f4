#pragma once

// Simulation and evaluation of identified reduced models.

#include "romid/matstore.hpp"

#include <complex>
#include <string>
#include <vector>

namespace romid::romsim {

/// Reduced states a_0..a_K as columns, sampled every dt.
struct RomTrajectory {
    Matrix states;  // r × (K+1)
    double dt = 1.0;

    Index steps() const { return states.cols() - 1; }
    Vector times() const;
};

/// a_0 = Lᵀ x0 (x0 in original units, normalized through the model's spec);
/// a_{k+1} = M a_k + P u_k for every column u_k of `inputs`.
RomTrajectory rom_simulate(const matstore::RomModel& model, const Eigen::Ref<const Vector>& x0,
                           const Eigen::Ref<const Matrix>& inputs);

/// a = Lᵀ x after normalization.
Vector project(const matstore::RomModel& model, const Eigen::Ref<const Vector>& x);

/// x = L a, mapped back to original units.
Vector lift(const matstore::RomModel& model, const Eigen::Ref<const Vector>& a);

struct Spectrum {
    std::vector<std::complex<double>> values;
};

/// Eigenvalues ordered by magnitude (descending), ties by phase (ascending).
Spectrum eigenvalues(const Eigen::Ref<const Matrix>& M);

/// Largest distance between paired eigenvalues under the pairing that
/// minimizes the total distance. Spectra must have equal length.
double matching_distance(const Spectrum& a, const Spectrum& b);

/// Spatial mean of every field over time, in original units; one row per
/// field. Computed from row means of L, without lifting full states.
Matrix field_means(const matstore::RomModel& model, const RomTrajectory& traj);

/// Same for full states (one column per snapshot).
Matrix field_means(const std::vector<matstore::FieldSpan>& layout, const Eigen::Ref<const Matrix>& states);

struct FieldMetrics {
    std::string field;
    double rel_rms = 0.0;
    double max_abs = 0.0;
};

struct Comparison {
    Vector times;
    std::vector<std::string> fields;
    Matrix rom_means;  // fields × samples
    Matrix ref_means;
    std::vector<FieldMetrics> metrics;
};

/// Compares mean-field series of a trajectory against reference snapshots.
/// Throws DimensionMismatch if the time grids differ.
Comparison compare(const matstore::RomModel& model, const RomTrajectory& traj,
                   const matstore::SnapshotSet& reference);

/// Layout used for mean fields: the given one, or a single "state" field.
std::vector<matstore::FieldSpan> effective_layout(const std::vector<matstore::FieldSpan>& layout, Index rows);

}  // namespace romid::romsim
