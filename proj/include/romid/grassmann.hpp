#pragma once

// Optimization over the Grassmann manifold G(n, r) of r-dimensional subspaces
// of Rⁿ. A point is represented by an orthonormal n × r basis L; a tangent
// vector at L by a horizontal n × r matrix H (LᵀH = 0).

#include "romid/errors.hpp"
#include "romid/matstore.hpp"

#include <functional>
#include <limits>
#include <string_view>
#include <vector>

namespace romid::grassmann {

using CostFn = std::function<double(const Matrix&)>;
/// Componentwise derivative ∂F/∂L (not yet projected).
using GradFn = std::function<Matrix(const Matrix&)>;

/// Horizontal tangent vector together with its thin SVD H = Û Σ Vᵀ.
class TangentDirection {
public:
    /// Throws TangencyError if ‖LᵀH‖_F > 1e-8·‖H‖_F; the residual vertical
    /// part below that tolerance is projected out.
    TangentDirection(const Eigen::Ref<const Matrix>& base, Matrix H);

    const Matrix& matrix() const { return H_; }
    const Matrix& U_hat() const { return U_; }
    const Vector& sigma() const { return sigma_; }
    const Matrix& V() const { return V_; }
    double norm() const { return H_.norm(); }

private:
    Matrix H_;
    Matrix U_;
    Vector sigma_;
    Matrix V_;
};

/// L′(t) = L V cos(tΣ) Vᵀ + Û sin(tΣ) Vᵀ.
Matrix geodesic(const Eigen::Ref<const Matrix>& L, const TangentDirection& H, double t);

/// L (LᵀL)^{-1/2}: the nearest orthonormal basis of the same subspace.
Matrix orthonormalize(const Eigen::Ref<const Matrix>& L);

/// G = ∂F/∂L − L Lᵀ ∂F/∂L (applied twice so LᵀG vanishes to rounding relative to ‖G‖).
Matrix manifold_gradient(const Eigen::Ref<const Matrix>& L, const Eigen::Ref<const Matrix>& dFdL);

struct Transported {
    Matrix direction;  // τH
    Matrix gradient;   // τG
};

/// Parallel transport of H and G from L along the geodesic of H to t.
Transported transport(const Eigen::Ref<const Matrix>& L, const TangentDirection& H,
                      const Eigen::Ref<const Matrix>& G, double t);

/// tr((G − τG_prev)ᵀ G) / tr(Gᵀ G); zero when the denominator underflows.
double pr_gamma(const Eigen::Ref<const Matrix>& G, const Eigen::Ref<const Matrix>& tauG_prev);

struct LineSearchOptions {
    double sufficient_decrease = 1e-4;  // Armijo c₁
    double contraction = 0.5;
    int max_backtracks = 40;
    // Doubling steps tried after an accepted first trial, capped at a
    // principal rotation angle of π/2.
    int max_expansions = 30;
    // Extra cost evaluations spent moving the accepted step toward the
    // minimizer along the geodesic (Brent's method); 0 keeps plain Armijo.
    int refine_evaluations = 20;
    double refine_tol = 1e-4;  // relative step tolerance of the refinement
};

struct LineSearchResult {
    double step = 0.0;
    double cost = 0.0;
    Matrix point;
    int evaluations = 0;
};

/// Step along the geodesic from L satisfying the Armijo condition, moved
/// toward argmin F(L(t)) when refinement is enabled. `slope` is tr(GᵀH) and
/// must be negative. Trial points are re-orthonormalized before evaluation.
/// Throws LineSearchError if no step decreases enough.
LineSearchResult line_search(const CostFn& cost, const Eigen::Ref<const Matrix>& L, const TangentDirection& H,
                             double cost_at_L, double slope, double initial_step,
                             const LineSearchOptions& opts = {});

/// Conjugacy factor: the printed form divides by the current gradient norm,
/// the classical Polak-Ribière form (clamped at 0) by the previous one.
enum class Conjugacy { Printed, ClassicalPlus };

/// max(0, tr((G − τG_prev)ᵀ G) / tr(G_prevᵀ G_prev)).
double pr_plus_gamma(const Eigen::Ref<const Matrix>& G, const Eigen::Ref<const Matrix>& tauG_prev,
                     double prev_grad_norm2);

struct CgOptions {
    int max_iters = 2000;
    double grad_tol = 1e-10;
    double rel_cost_tol = 1e-12;
    int stagnation_window = 5;
    int restart_period = 0;  // 0 selects r·(n − r)
    double cost_target = -std::numeric_limits<double>::infinity();
    Conjugacy conjugacy = Conjugacy::ClassicalPlus;
    // Absolute accuracy of cost evaluations; a decrease over the stagnation
    // window below rel_cost_tol·|F| + cost_resolution counts as stagnation.
    double cost_resolution = 0.0;
    LineSearchOptions line;
};

enum class Termination { GradientTolerance, CostStagnation, CostTarget, MaxIterations, RoundingLimit, Stalled };

std::string_view to_string(Termination t);

struct CgReport {
    int iterations = 0;
    double final_cost = 0.0;
    double final_grad_norm = 0.0;
    std::vector<double> cost_history;
    std::vector<double> grad_norm_history;
    Termination reason = Termination::MaxIterations;
    int restarts = 0;
    int steepest_fallbacks = 0;
    int cost_evaluations = 0;
};

/// Raised when even a steepest-descent step fails the line search.
class StalledError : public Error {
public:
    StalledError(const std::string& what, CgReport report) : Error(what), report_(std::move(report)) {}
    const CgReport& report() const { return report_; }

private:
    CgReport report_;
};

struct CgResult {
    Matrix minimizer;
    CgReport report;
};

/// Polak-Ribière conjugate gradient on G(n, r) starting from orthonormal L0.
CgResult cg_minimize(const CostFn& cost, const GradFn& grad, const Eigen::Ref<const Matrix>& L0,
                     const CgOptions& opts = {});

}  // namespace romid::grassmann
