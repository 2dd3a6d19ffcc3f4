#include "romid/grassmann.hpp"

#include "romid/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace romid::grassmann {

TangentDirection::TangentDirection(const Eigen::Ref<const Matrix>& base, Matrix H) : H_(std::move(H)) {
    if (H_.rows() != base.rows() || H_.cols() != base.cols()) {
        throw DimensionMismatch("tangent direction shape differs from its basepoint");
    }
    require_finite(H_, "tangent direction");
    const Matrix vertical = base.transpose() * H_;
    const double hn = H_.norm();
    if (vertical.norm() > 1e-8 * hn) {
        throw TangencyError("direction is not horizontal: ‖LᵀH‖ = " + std::to_string(vertical.norm()) +
                            ", ‖H‖ = " + std::to_string(hn));
    }
    H_.noalias() -= base * vertical;
    const decomp::ThinSvd svd = decomp::thin_svd_untruncated(H_);
    U_ = svd.U;
    sigma_ = svd.sigma;
    V_ = svd.V;
}

Matrix geodesic(const Eigen::Ref<const Matrix>& L, const TangentDirection& H, double t) {
    const Vector angle = t * H.sigma();
    const Vector c = angle.array().cos();
    const Vector s = angle.array().sin();
    return (L * H.V()) * c.asDiagonal() * H.V().transpose() + H.U_hat() * s.asDiagonal() * H.V().transpose();
}

Matrix manifold_gradient(const Eigen::Ref<const Matrix>& L, const Eigen::Ref<const Matrix>& dFdL) {
    if (L.rows() != dFdL.rows() || L.cols() != dFdL.cols()) {
        throw DimensionMismatch("gradient shape differs from the basepoint");
    }
    Matrix G = dFdL - L * (L.transpose() * dFdL);
    G.noalias() -= L * (L.transpose() * G);
    return G;
}

Transported transport(const Eigen::Ref<const Matrix>& L, const TangentDirection& H,
                      const Eigen::Ref<const Matrix>& G, double t) {
    const Vector angle = t * H.sigma();
    const Vector c = angle.array().cos();
    const Vector s = angle.array().sin();
    const Matrix LV = L * H.V();
    Transported out;
    out.direction = (-LV * s.asDiagonal() + H.U_hat() * c.asDiagonal()) * H.sigma().asDiagonal() *
                    H.V().transpose();
    const Vector one_minus_c = (1.0 - c.array()).matrix();
    out.gradient = G - (LV * s.asDiagonal() + H.U_hat() * one_minus_c.asDiagonal()) * (H.U_hat().transpose() * G);
    return out;
}

double pr_gamma(const Eigen::Ref<const Matrix>& G, const Eigen::Ref<const Matrix>& tauG_prev) {
    if (G.rows() != tauG_prev.rows() || G.cols() != tauG_prev.cols()) {
        throw DimensionMismatch("conjugacy factor: gradient shapes differ");
    }
    const double denom = G.squaredNorm();
    if (denom < 1e-300) return 0.0;
    return (G - tauG_prev).cwiseProduct(G).sum() / denom;
}

double pr_plus_gamma(const Eigen::Ref<const Matrix>& G, const Eigen::Ref<const Matrix>& tauG_prev,
                     double prev_grad_norm2) {
    if (G.rows() != tauG_prev.rows() || G.cols() != tauG_prev.cols()) {
        throw DimensionMismatch("conjugacy factor: gradient shapes differ");
    }
    if (prev_grad_norm2 < 1e-300) return 0.0;
    return std::max(0.0, (G - tauG_prev).cwiseProduct(G).sum() / prev_grad_norm2);
}

Matrix orthonormalize(const Eigen::Ref<const Matrix>& L) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(L.transpose() * L);
    const Vector d = eig.eigenvalues();
    if (!(d.minCoeff() > 0.0)) throw NumericalError("basis has lost full column rank");
    const Vector inv_sqrt = d.array().rsqrt();
    return L * (eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose());
}

LineSearchResult line_search(const CostFn& cost, const Eigen::Ref<const Matrix>& L, const TangentDirection& H,
                             double cost_at_L, double slope, double initial_step, const LineSearchOptions& opts) {
    if (!(slope < 0.0)) {
        throw LineSearchError("search direction is not a descent direction (slope " + std::to_string(slope) + ")");
    }
    if (!(initial_step > 0.0) || !std::isfinite(initial_step)) {
        throw LineSearchError("initial step must be positive and finite");
    }
    const double c1 = opts.sufficient_decrease;
    auto armijo = [&](double t, double f) { return std::isfinite(f) && f <= cost_at_L + c1 * t * slope; };

    LineSearchResult best;
    bool found = false;
    // Evaluates F at L(t) and keeps the lowest point that satisfies Armijo.
    auto eval = [&](double t) {
        Matrix trial = orthonormalize(geodesic(L, H, t));
        const double f = cost(trial);
        ++best.evaluations;
        if (armijo(t, f) && (!found || f < best.cost)) {
            best.step = t;
            best.cost = f;
            best.point = std::move(trial);
            found = true;
        }
        return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    };

    const double sigma_max = H.sigma().size() ? H.sigma().maxCoeff() : 0.0;
    const double t_cap = sigma_max > 0.0 ? 0.5 * std::numbers::pi / sigma_max : initial_step;

    // Interval [lo, hi] around the accepted step `mid`, for the refinement.
    double lo = 0.0, mid = initial_step, hi = initial_step;
    double f_mid = eval(initial_step);
    if (found) {
        bool bracketed = false;
        for (int k = 0; k < opts.max_expansions && mid < t_cap; ++k) {
            const double t = std::min(2.0 * mid, t_cap);
            const double f = eval(t);
            if (!(f < f_mid)) {
                hi = t;
                bracketed = true;
                break;
            }
            lo = mid;
            mid = t;
            f_mid = f;
        }
        if (!bracketed) return best;
    } else {
        double t = initial_step;
        for (int k = 0; k < opts.max_backtracks && !found; ++k) {
            hi = t;
            t *= opts.contraction;
            f_mid = eval(t);
        }
        if (!found) {
            throw LineSearchError("no sufficient decrease after " + std::to_string(opts.max_backtracks) +
                                  " backtracks");
        }
        mid = t;
    }
    if (opts.refine_evaluations <= 0) return best;

    // Brent's parabolic/golden-section minimization on [lo, hi] from mid.
    constexpr double golden = 0.3819660112501051;
    double a = lo, b = hi;
    double x = mid, w = mid, v = mid;
    double fx = f_mid, fw = f_mid, fv = f_mid;
    double d = 0.0, e = 0.0;
    for (int k = 0; k < opts.refine_evaluations; ++k) {
        const double xm = 0.5 * (a + b);
        const double tol1 = opts.refine_tol * std::abs(x) + 1e-300;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
        bool parabolic = false;
        if (std::abs(e) > tol1) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            if (std::abs(p) < std::abs(0.5 * q * e) && p > q * (a - x) && p < q * (b - x)) {
                e = d;
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
                parabolic = true;
            }
        }
        if (!parabolic) {
            e = (x >= xm ? a : b) - x;
            d = golden * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
        const double fu = eval(u);
        if (fu <= fx) {
            (u >= x ? a : b) = x;
            v = w, fv = fw;
            w = x, fw = fx;
            x = u, fx = fu;
        } else {
            (u < x ? a : b) = u;
            if (fu <= fw || w == x) {
                v = w, fv = fw;
                w = u, fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u, fv = fu;
            }
        }
    }
    return best;
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::GradientTolerance: return "gradient_tolerance";
        case Termination::CostStagnation: return "cost_stagnation";
        case Termination::CostTarget: return "cost_target";
        case Termination::MaxIterations: return "max_iterations";
        case Termination::RoundingLimit: return "rounding_limit";
        case Termination::Stalled: return "stalled";
    }
    return "unknown";
}

namespace {

// True when no decrease along −G can exceed the rounding noise of the cost:
// fits f(t) ≈ f + s t + κt²/2 from one trial step and compares s²/2κ with the
// noise level.
bool rounding_limited(const CostFn& cost, const Matrix& L, const Matrix& G, double f, double resolution,
                      CgReport& report) {
    const double g2 = G.squaredNorm();
    if (!(g2 > 0.0)) return true;
    const double t = 1.0 / std::sqrt(g2);
    const double f1 = cost(orthonormalize(geodesic(L, TangentDirection(L, -G), t)));
    ++report.cost_evaluations;
    if (!std::isfinite(f1)) return false;
    const double noise = std::max(resolution, 16.0 * std::numeric_limits<double>::epsilon() * std::abs(f));
    const double kappa = 2.0 * (f1 - f + g2 * t) / (t * t);
    if (!(kappa > 0.0)) return std::abs(f1 - f) <= noise;
    return g2 * g2 / (2.0 * kappa) <= noise;
}

}  // namespace

CgResult cg_minimize(const CostFn& cost, const GradFn& grad, const Eigen::Ref<const Matrix>& L0,
                     const CgOptions& opts) {
    const Index n = L0.rows();
    const Index r = L0.cols();
    if (r < 1 || r > n) throw DimensionMismatch("basepoint must be n × r with 1 ≤ r ≤ n");
    if ((L0.transpose() * L0 - Matrix::Identity(r, r)).norm() > 1e-8) {
        throw NumericalError("initial basis is not orthonormal");
    }
    const int restart_period =
        opts.restart_period > 0 ? opts.restart_period : static_cast<int>(std::max<Index>(1, r * (n - r)));

    CgReport report;
    Matrix L = L0;
    double f = cost(L);
    ++report.cost_evaluations;
    Matrix G = manifold_gradient(L, grad(L));
    Matrix H = -G;
    report.cost_history.push_back(f);

    double t_prev = 0.0;
    int since_restart = 0;
    int iter = 0;
    for (;; ++iter) {
        const double gnorm = G.norm();
        report.final_grad_norm = gnorm;
        report.grad_norm_history.push_back(gnorm);
        if (gnorm <= opts.grad_tol) {
            report.reason = Termination::GradientTolerance;
            break;
        }
        if (f <= opts.cost_target) {
            report.reason = Termination::CostTarget;
            break;
        }
        const auto& hist = report.cost_history;
        const auto window = static_cast<std::size_t>(opts.stagnation_window);
        if (window > 0 && hist.size() > window) {
            const double old = hist[hist.size() - 1 - window];
            if (old - f <= opts.rel_cost_tol * std::abs(old) + opts.cost_resolution) {
                report.reason = Termination::CostStagnation;
                break;
            }
        }
        if (iter >= opts.max_iters) {
            report.reason = Termination::MaxIterations;
            break;
        }

        H.noalias() -= L * (L.transpose() * H);
        double slope = G.cwiseProduct(H).sum();
        bool steepest = false;
        if (!(slope < 0.0)) {
            H = -G;
            slope = -gnorm * gnorm;
            steepest = true;
            since_restart = 0;
            ++report.restarts;
        }

        TangentDirection dir(L, H);
        LineSearchResult ls;
        try {
            ls = line_search(cost, L, dir, f, slope, t_prev > 0.0 ? t_prev : 1.0 / dir.norm(), opts.line);
        } catch (const LineSearchError&) {
            bool failed = steepest;
            if (!steepest) {
                ++report.steepest_fallbacks;
                dir = TangentDirection(L, -G);
                try {
                    ls = line_search(cost, L, dir, f, -gnorm * gnorm, 1.0 / gnorm, opts.line);
                } catch (const LineSearchError&) {
                    failed = true;
                }
                since_restart = 0;
            }
            if (failed) {
                report.final_cost = f;
                report.iterations = iter;
                if (rounding_limited(cost, L, G, f, opts.cost_resolution, report)) {
                    report.reason = Termination::RoundingLimit;
                    return {std::move(L), std::move(report)};
                }
                report.reason = Termination::Stalled;
                throw StalledError("line search failed along the steepest-descent direction", report);
            }
        }
        report.cost_evaluations += ls.evaluations;
        t_prev = ls.step;

        Transported moved = transport(L, dir, G, ls.step);
        L = std::move(ls.point);
        f = ls.cost;

        Matrix G_next = manifold_gradient(L, grad(L));
        const double gamma = opts.conjugacy == Conjugacy::Printed
                                 ? pr_gamma(G_next, moved.gradient)
                                 : pr_plus_gamma(G_next, moved.gradient, G.squaredNorm());
        H = -G_next + gamma * moved.direction;
        if (++since_restart >= restart_period) {
            H = -G_next;
            since_restart = 0;
            ++report.restarts;
        }
        G = std::move(G_next);
        report.cost_history.push_back(f);
    }
    report.iterations = iter;
    report.final_cost = f;
    return {std::move(L), std::move(report)};
}

}  // namespace romid::grassmann
