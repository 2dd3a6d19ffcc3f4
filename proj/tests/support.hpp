#pragma once

// Shared fixtures: seeded random matrices and systems, scratch directories.

#include "romid/matstore.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

using romid::Index;
using romid::Matrix;
using romid::Vector;

inline Matrix randn(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = d(rng);
    return m;
}

inline Matrix rand_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(randn(rows, cols, rng));
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

inline Matrix rand_orthogonal(Index n, std::mt19937_64& rng) { return rand_orthonormal(n, n, rng); }

/// Random A with spectral radius `radius` (A = Q diag Qᵀ scaled), and B.
struct LinearSystem {
    Matrix A;
    Matrix B;
};

inline LinearSystem rand_stable_system(Index n, Index p, std::mt19937_64& rng, double radius = 0.9) {
    Matrix A = randn(n, n, rng);
    Eigen::EigenSolver<Matrix> es(A, false);
    A *= radius / es.eigenvalues().cwiseAbs().maxCoeff();
    return {A, randn(n, p, rng)};
}

/// Snapshots x_{k+1} = A x_k + B u_k with random inputs; S is n × m, U is p × (m−1).
inline std::pair<Matrix, Matrix> simulate(const LinearSystem& sys, Index m, std::mt19937_64& rng) {
    const Index n = sys.A.rows();
    const Index p = sys.B.cols();
    Matrix U = randn(p, m - 1, rng);
    Matrix S(n, m);
    S.col(0) = randn(n, 1, rng);
    for (Index k = 0; k + 1 < m; ++k) S.col(k + 1) = sys.A * S.col(k) + sys.B * U.col(k);
    return {S, U};
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("romid_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double rel_err(const Matrix& a, const Matrix& b) {
    const double nb = b.norm();
    return nb > 0.0 ? (a - b).norm() / nb : (a - b).norm();
}

}  // namespace testing
