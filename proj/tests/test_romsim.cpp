#include "romid/errors.hpp"
#include "romid/romsim.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace romid;
using namespace romid::romsim;
using matstore::Method;
using matstore::RomModel;
using testing::randn;

TEST_SUITE("romsim") {

TEST_CASE("identity dynamics with zero input freeze the state") {
    std::mt19937_64 rng(61);
    const Matrix L = testing::rand_orthonormal(6, 2, rng);
    const RomModel model(L, Matrix::Identity(2, 2), Matrix::Zero(2, 1), Method::DMDc, 1.0);
    const Vector x0 = L * Vector::Ones(2);
    const auto traj = rom_simulate(model, x0, Matrix::Zero(1, 7));
    CHECK(traj.steps() == 7);
    for (Index k = 0; k <= 7; ++k) CHECK((traj.states.col(k) - Vector::Ones(2)).norm() < 1e-14);
}

TEST_CASE("scalar recursion") {
    const Matrix L = Matrix::Ones(1, 1);
    const RomModel model(L, Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Method::DMDc, 0.25);
    Matrix u(1, 4);
    u << 1, 0, 2, -1;
    const auto traj = rom_simulate(model, Vector::Constant(1, 4.0), u);
    Vector expected(5);
    expected << 4, 3, 1.5, 2.75, 0.375;
    CHECK((traj.states.row(0).transpose() - expected).norm() < 1e-14);
    CHECK(traj.times()(4) == doctest::Approx(1.0));
}

TEST_CASE("zero-length input gives the projected initial state") {
    std::mt19937_64 rng(62);
    const Matrix L = testing::rand_orthonormal(5, 2, rng);
    const RomModel model(L, randn(2, 2, rng), randn(2, 1, rng), Method::OMDc, 1.0);
    const Vector x0 = randn(5, 1, rng);
    const auto traj = rom_simulate(model, x0, Matrix(1, 0));
    CHECK(traj.states.cols() == 1);
    CHECK((traj.states.col(0) - L.transpose() * x0).norm() < 1e-14);
    CHECK_THROWS_AS(rom_simulate(model, x0, Matrix::Zero(2, 3)), DimensionMismatch);
    CHECK_THROWS_AS(rom_simulate(model, Vector::Zero(4), Matrix::Zero(1, 3)), DimensionMismatch);
}

TEST_CASE("lift after project is the orthogonal projection") {
    std::mt19937_64 rng(63);
    const Matrix L = testing::rand_orthonormal(7, 3, rng);
    const RomModel model(L, Matrix::Identity(3, 3), Matrix::Zero(3, 1), Method::DMDc, 1.0);
    const Vector x = randn(7, 1, rng);
    const Vector px = lift(model, project(model, x));
    CHECK((px - L * L.transpose() * x).norm() < 1e-13);
    CHECK((L.transpose() * (x - px)).norm() < 1e-13);
    const Vector a = randn(3, 1, rng);
    CHECK((project(model, lift(model, a)) - a).norm() < 1e-13);
}

TEST_CASE("normalized models lift to physical units") {
    const std::vector<matstore::FieldSpan> layout{{"a", 0, 2}, {"b", 2, 2}};
    matstore::NormSpec spec;
    spec.fields = {{10.0, 2.0}, {-1.0, 0.5}};
    Matrix L = Matrix::Zero(4, 1);
    L(0, 0) = L(1, 0) = L(2, 0) = L(3, 0) = 0.5;
    const RomModel model(L, Matrix::Identity(1, 1), Matrix::Zero(1, 1), Method::DMDc, 1.0, spec, layout);
    const Vector x = lift(model, Vector::Constant(1, 2.0));
    Vector expected(4);
    expected << 12.0, 12.0, -0.5, -0.5;
    CHECK((x - expected).norm() < 1e-14);
    CHECK(project(model, x)(0) == doctest::Approx(2.0));
    const auto traj = rom_simulate(model, x, Matrix::Zero(1, 2));
    const Matrix means = field_means(model, traj);
    CHECK(means(0, 2) == doctest::Approx(12.0));
    CHECK(means(1, 2) == doctest::Approx(-0.5));
}

TEST_CASE("eigenvalues") {
    Matrix D = Matrix::Zero(3, 3);
    D.diagonal() << 0.2, -0.9, 0.5;
    const auto s = eigenvalues(D);
    REQUIRE(s.values.size() == 3);
    CHECK(s.values[0].real() == doctest::Approx(-0.9));
    CHECK(s.values[1].real() == doctest::Approx(0.5));
    CHECK(s.values[2].real() == doctest::Approx(0.2));

    const double th = 0.3, rho = 0.8;
    Matrix R(2, 2);
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const auto rs = eigenvalues(rho * R);
    CHECK(std::abs(rs.values[0] - std::polar(rho, -th)) < 1e-14);
    CHECK(std::abs(rs.values[1] - std::polar(rho, th)) < 1e-14);

    std::mt19937_64 rng(64);
    const Matrix A = randn(5, 5, rng);
    const Matrix T = randn(5, 5, rng);
    CHECK(matching_distance(eigenvalues(A), eigenvalues(T * A * T.inverse())) < 1e-9);
    CHECK_THROWS_AS(eigenvalues(Matrix::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("optimal matching") {
    Spectrum a, b;
    a.values = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}};
    b.values = {{-1.0, 0.1}, {1.05, 0.0}, {0.0, 1.0}};
    CHECK(matching_distance(a, b) == doctest::Approx(0.1));
    CHECK(matching_distance(a, a) == 0.0);
    // Taking the globally closest pair first (1 ↔ 0.6) would leave 0 ↔ 2.
    Spectrum c, d;
    c.values = {{0.0, 0.0}, {1.0, 0.0}};
    d.values = {{0.6, 0.0}, {2.0, 0.0}};
    CHECK(matching_distance(c, d) == doctest::Approx(1.0));
    Spectrum e;
    e.values = {{0.0, 0.0}};
    CHECK_THROWS_AS(matching_distance(c, e), DimensionMismatch);
}

TEST_CASE("comparison against a reference") {
    std::mt19937_64 rng(65);
    const Matrix L = testing::rand_orthonormal(6, 2, rng);
    const RomModel model(L, 0.9 * Matrix::Identity(2, 2), randn(2, 1, rng), Method::DMDc, 0.5);
    const Matrix U = randn(1, 9, rng);
    const auto traj = rom_simulate(model, L * randn(2, 1, rng), U);
    const Matrix X = L * traj.states;
    const std::vector<matstore::FieldSpan> layout{{"f", 0, 3}, {"g", 3, 3}};
    const matstore::SnapshotSet exact(X, U, 0.5, layout);
    const RomModel with_layout(L, model.system(), model.input(), Method::DMDc, 0.5, std::nullopt, layout);
    const auto c = compare(with_layout, traj, exact);
    REQUIRE(c.metrics.size() == 2);
    CHECK(c.metrics[0].rel_rms < 1e-12);
    CHECK(c.metrics[1].max_abs < 1e-12);

    const matstore::SnapshotSet shifted((X.array() + 0.1).matrix(), U, 0.5, layout);
    const auto cs = compare(with_layout, traj, shifted);
    CHECK(cs.metrics[0].max_abs == doctest::Approx(0.1));
    const Vector ref = c.ref_means.row(0).transpose().array() + 0.1;
    CHECK(cs.metrics[0].rel_rms == doctest::Approx(0.1 / std::sqrt(ref.squaredNorm() / ref.size())));

    const matstore::SnapshotSet short_ref(X.leftCols(5), U.leftCols(4), 0.5, layout);
    CHECK_THROWS_AS(compare(with_layout, traj, short_ref), DimensionMismatch);
}

TEST_CASE("linearity and superposition") {
    std::mt19937_64 rng(66);
    const Matrix L = testing::rand_orthonormal(8, 3, rng);
    const RomModel model(L, 0.5 * randn(3, 3, rng), randn(3, 2, rng), Method::OMDc, 1.0);
    const Vector x1 = randn(8, 1, rng), x2 = randn(8, 1, rng);
    const Matrix u1 = randn(2, 6, rng), u2 = randn(2, 6, rng);
    const double a = 1.7, b = -0.4;
    const auto t1 = rom_simulate(model, x1, u1);
    const auto t2 = rom_simulate(model, x2, u2);
    const auto t12 = rom_simulate(model, a * x1 + b * x2, a * u1 + b * u2);
    CHECK((t12.states - a * t1.states - b * t2.states).norm() < 1e-10 * t12.states.norm());
}

TEST_CASE("spectrum is invariant under a change of reduced coordinates") {
    std::mt19937_64 rng(67);
    const Matrix M = randn(4, 4, rng);
    const Matrix R = testing::rand_orthogonal(4, rng);
    CHECK(matching_distance(eigenvalues(M), eigenvalues(R.transpose() * M * R)) < 1e-10);
}


TEST_CASE("scalar recursion approaches its fixed point") {
    const RomModel model(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Method::DMDc, 1.0);
    const auto traj = rom_simulate(model, Vector::Zero(1), Matrix::Ones(1, 30));
    CHECK(traj.states(0, 1) == 1.0);
    CHECK(traj.states(0, 2) == 1.5);
    CHECK(traj.states(0, 3) == 1.75);
    CHECK(std::abs(traj.states(0, 30) - 2.0) < 1e-8);
}

TEST_CASE("lift of zero and projection residual") {
    std::mt19937_64 rng(68);
    const Matrix L = testing::rand_orthonormal(9, 3, rng);
    const RomModel model(L, Matrix::Identity(3, 3), Matrix::Zero(3, 1), Method::OMDc, 1.0);
    CHECK(lift(model, Vector::Zero(3)).norm() == 0.0);
    const Vector in_span = L * randn(3, 1, rng);
    CHECK((lift(model, project(model, in_span)) - in_span).norm() < 1e-10);
    const Matrix S = randn(9, 15, rng);
    double lifted = 0.0;
    for (Index k = 0; k < S.cols(); ++k) lifted += (lift(model, project(model, S.col(k))) - S.col(k)).squaredNorm();
    CHECK(std::sqrt(lifted) == doctest::Approx((S - L * L.transpose() * S).norm()).epsilon(1e-12));
}

}
