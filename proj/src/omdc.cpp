#include "romid/omdc.hpp"

#include "romid/decomp.hpp"
#include "romid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace romid::omdc {

namespace {

// Products of L with the cached data, shared by cost and gradient.
struct Projection {
    Matrix A;  // LᵀX̂, r × (m−1)
    Matrix B;  // LᵀŶ, r × (m−1)
    Matrix M;  // M* = N G⁻¹ with N = BAᵀ, G = AAᵀ (+ ridge)
    bool ridged = false;
};

Projection project(const Eigen::Ref<const Matrix>& L, const OmdcData& data, bool allow_ridge) {
    if (L.rows() != data.rows()) {
        throw DimensionMismatch("mode matrix has " + std::to_string(L.rows()) + " rows, data has " +
                                std::to_string(data.rows()));
    }
    const Index r = L.cols();
    Projection p;
    p.A = L.transpose() * data.X_hat();
    p.B = L.transpose() * data.Y_hat();
    Matrix gram = p.A * p.A.transpose();
    const Matrix N = p.B * p.A.transpose();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxGramCondition) {
        const double lambda = 1e-12 * gram.trace() / static_cast<double>(r);
        if (!allow_ridge || !(lambda > 0.0)) {
            throw ProjectedRankError("LᵀX̂X̂ᵀL is singular or ill-conditioned (eigenvalues " + std::to_string(lo) +
                                     " .. " + std::to_string(hi) + ")");
        }
        gram.diagonal().array() += lambda;
        p.ridged = true;
    }
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw ProjectedRankError("LᵀX̂X̂ᵀL is not positive definite");
    p.M = llt.solve(N.transpose()).transpose();
    return p;
}

double cost_from(const Eigen::Ref<const Matrix>& L, const OmdcData& data, const Projection& p) {
    // Sum-of-squares form of ‖Y‖² − ‖LᵀZ‖² − tr(N G⁻¹ Nᵀ); the D = I − LᵀL terms
    // make it exact off the manifold, so it has the same derivative.
    const Index r = L.cols();
    const Matrix D = Matrix::Identity(r, r) - L.transpose() * L;
    const Matrix LtZ = L.transpose() * data.Y_input();
    double f = (data.Y_input() - L * LtZ).squaredNorm();
    f += (LtZ.transpose() * D * LtZ).trace();
    f += (data.Y_hat() - L * p.B).squaredNorm();
    f += (p.B.transpose() * D * p.B).trace();
    f += (p.B - p.M * p.A).squaredNorm();
    return f;
}

Matrix grad_from(const Eigen::Ref<const Matrix>& L, const OmdcData& data, const Projection& p) {
    // −2 Z ZᵀL − 2 ŶX̂ᵀL G⁻¹Nᵀ − 2 X̂ŶᵀL N G⁻¹ + 2 X̂X̂ᵀL M*ᵀM*
    const Matrix Mt = p.M.transpose();
    Matrix g = -2.0 * data.Y_input() * (data.Y_input().transpose() * L);
    g.noalias() -= 2.0 * data.Y_hat() * (p.A.transpose() * Mt);
    g.noalias() -= 2.0 * data.X_hat() * ((p.B.transpose() - p.A.transpose() * Mt) * p.M);
    return g;
}

}  // namespace

OmdcData::OmdcData(Matrix X, Matrix Y, Matrix U) : X_(std::move(X)), Y_(std::move(Y)), U_(std::move(U)) {
    if (X_.rows() != Y_.rows() || X_.cols() != Y_.cols() || U_.cols() != X_.cols()) {
        throw DimensionMismatch("OMDc needs X, Y of equal shape and U with matching column count");
    }
    if (X_.cols() < 1 || U_.rows() < 1) throw DimensionMismatch("OMDc needs at least one transition and one input");
    require_finite(X_, "X");
    require_finite(Y_, "Y");
    require_finite(U_, "U");
    if (U_.rows() > U_.cols()) {
        throw InputRankError("UUᵀ is singular: " + std::to_string(U_.rows()) + " inputs over " +
                             std::to_string(U_.cols()) + " transitions");
    }
    const decomp::ThinQr qr = decomp::thin_qr(U_.transpose());
    const Eigen::JacobiSVD<Matrix> rsvd(qr.R);
    const double smax = rsvd.singularValues().maxCoeff();
    const double smin = rsvd.singularValues().minCoeff();
    if (!(smin > 0.0) || (smax / smin) * (smax / smin) > kMaxGramCondition) {
        throw InputRankError("UUᵀ is ill-conditioned (cond " + std::to_string((smax / smin) * (smax / smin)) +
                             "); inputs are not sufficiently exciting");
    }
    input_Q_ = qr.Q;
    input_R_ = qr.R;
    Y_input_ = Y_ * input_Q_;
    X_input_ = X_ * input_Q_;
    Y_hat_ = Y_ - Y_input_ * input_Q_.transpose();
    X_hat_ = X_ - X_input_ * input_Q_.transpose();
    y_norm2_ = Y_.squaredNorm();
}

Matrix OmdcData::projector() const {
    const Index k = transitions();
    return Matrix::Identity(k, k) - input_Q_ * input_Q_.transpose();
}

Matrix optimal_P(const Eigen::Ref<const Matrix>& L, const Eigen::Ref<const Matrix>& M, const OmdcData& data) {
    if (L.rows() != data.rows() || M.rows() != L.cols() || M.cols() != L.cols()) {
        throw DimensionMismatch("optimal_P: inconsistent shapes");
    }
    // (LᵀY − M LᵀX) Q_u R_u⁻ᵀ
    const Matrix core = L.transpose() * data.Y_input() - M * (L.transpose() * data.X_input());
    return data.input_R().triangularView<Eigen::Upper>().transpose().solve<Eigen::OnTheRight>(core);
}

Matrix optimal_M(const Eigen::Ref<const Matrix>& L, const OmdcData& data) {
    return project(L, data, false).M;
}

double cost_F(const Eigen::Ref<const Matrix>& L, const OmdcData& data) {
    return cost_from(L, data, project(L, data, false));
}

Matrix grad_F(const Eigen::Ref<const Matrix>& L, const OmdcData& data) {
    return grad_from(L, data, project(L, data, false));
}

double residual_cost(const Eigen::Ref<const Matrix>& L, const Eigen::Ref<const Matrix>& M,
                     const Eigen::Ref<const Matrix>& P, const OmdcData& data) {
    if (L.rows() != data.rows() || M.rows() != L.cols() || P.rows() != L.cols() || P.cols() != data.input_dim()) {
        throw DimensionMismatch("residual_cost: inconsistent shapes");
    }
    return (data.Y() - L * (M * (L.transpose() * data.X())) - L * (P * data.U())).squaredNorm();
}

double RidgedObjective::cost(const Matrix& L) const {
    const Projection p = project(L, *data_, true);
    if (p.ridged) ++ridge_events_;
    return cost_from(L, *data_, p);
}

Matrix RidgedObjective::gradient(const Matrix& L) const {
    const Projection p = project(L, *data_, true);
    if (p.ridged) ++ridge_events_;
    return grad_from(L, *data_, p);
}

ReducedProblem reduce_problem(const Eigen::Ref<const Matrix>& S, const Eigen::Ref<const Matrix>& U) {
    const Index n = S.rows();
    const Index m = S.cols();
    if (m < 2) throw InsufficientSnapshots("need at least two snapshots");
    if (n < m) {
        throw DimensionMismatch("QR reduction needs n ≥ m (n = " + std::to_string(n) + ", m = " + std::to_string(m) +
                                "); use the full-space formulation");
    }
    if (U.cols() != m - 1) throw DimensionMismatch("U must have one column fewer than S");
    decomp::ThinQr qr = decomp::thin_qr(S);
    Matrix Xbar = qr.R.leftCols(m - 1);
    Matrix Ybar = qr.R.rightCols(m - 1);
    return ReducedProblem{std::move(qr.Q), std::move(qr.R), OmdcData(std::move(Xbar), std::move(Ybar), U)};
}

OmdcResult omdc_identify(const matstore::SnapshotSet& snap, Index r, const OmdcOptions& opts) {
    const Matrix& S = snap.states();
    const Index n = S.rows();
    const Index m = S.cols();
    if (m < 2) throw InsufficientSnapshots("need at least two snapshots");
    if (r < 1) throw RankError("rank must be at least 1");

    const bool reduced = opts.use_reduction && n >= m;
    std::optional<ReducedProblem> red;
    std::optional<OmdcData> full;
    Matrix init_source;
    if (reduced) {
        red.emplace(reduce_problem(S, snap.inputs()));
        init_source = red->R_bar;
    } else {
        auto [X, Y] = matstore::split_snapshots(S);
        full.emplace(std::move(X), std::move(Y), snap.inputs());
        init_source = S;
    }
    const OmdcData& data = reduced ? red->data : *full;

    const decomp::ThinSvd svd = decomp::thin_svd_untruncated(init_source);
    if (r >= svd.rank) {
        throw RankError("rank " + std::to_string(r) + " must be below rank S = " + std::to_string(svd.rank));
    }
    Matrix L0;
    if (opts.initial_basis) {
        if (opts.initial_basis->rows() != n || opts.initial_basis->cols() != r) {
            throw DimensionMismatch("initial basis must be n × r");
        }
        L0 = reduced ? Matrix(red->Q_bar.transpose() * *opts.initial_basis) : *opts.initial_basis;
        L0 = decomp::thin_qr(L0).Q;
    } else {
        L0 = svd.U.leftCols(r);
    }

    grassmann::CgOptions cg = opts.cg;
    cg.grad_tol = opts.grad_tol_rel * data.y_norm2();
    // Rounding error of one cost evaluation is O(m·ε·‖Y‖²).
    cg.cost_resolution = std::max(cg.cost_resolution, static_cast<double>(m) *
                                                          std::numeric_limits<double>::epsilon() * data.y_norm2());
    const RidgedObjective objective(data);
    auto result = grassmann::cg_minimize([&](const Matrix& L) { return objective.cost(L); },
                                         [&](const Matrix& L) { return objective.gradient(L); }, L0, cg);

    const Matrix& Lstar = result.minimizer;
    Matrix M = optimal_M(Lstar, data);
    Matrix P = optimal_P(Lstar, M, data);
    const double final_cost = cost_F(Lstar, data);
    Matrix modes = reduced ? Matrix(red->Q_bar * Lstar) : Lstar;

    return OmdcResult{matstore::RomModel(std::move(modes), std::move(M), std::move(P), matstore::Method::OMDc,
                                         snap.dt_sample(), snap.norm_spec(), snap.layout()),
                      std::move(result.report), final_cost, objective.ridge_events(), reduced};
}

}  // namespace romid::omdc
