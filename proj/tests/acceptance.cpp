// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "romid/decomp.hpp"
#include "romid/dmdc.hpp"
#include "romid/dryer.hpp"
#include "romid/grassmann.hpp"
#include "romid/omdc.hpp"
#include "romid/romsim.hpp"
#include "support.hpp"

#include <chrono>
#include <optional>
#include <cstdio>
#include <string>

using namespace romid;
using testing::randn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

struct RandomCase {
    testing::LinearSystem sys;
    Matrix S, U;
};

std::vector<RandomCase> random_cases() {
    std::mt19937_64 rng(2024);
    std::vector<RandomCase> cases;
    while (cases.size() < 20) {
        RandomCase c{testing::rand_stable_system(8, 2, rng), {}, {}};
        std::tie(c.S, c.U) = testing::simulate(c.sys, 40, rng);
        auto [X, Y] = matstore::split_snapshots(c.S);
        // Keep only cases with full-rank Ω.
        if (decomp::thin_svd(matstore::stack_omega(X, c.U)).rank == 10) cases.push_back(std::move(c));
    }
    return cases;
}

void criterion_1(const std::vector<RandomCase>& cases) {
    const auto t0 = Clock::now();
    double worst_err = 0.0, worst_res = 0.0;
    for (const auto& c : cases) {
        auto [X, Y] = matstore::split_snapshots(c.S);
        const auto full = dmdc::dmdc_full(X, Y, c.U);
        Matrix est(8, 10), truth(8, 10);
        est << full.dense_A(), full.B();
        truth << c.sys.A, c.sys.B;
        worst_err = std::max(worst_err, testing::rel_err(est, truth));
        const Matrix Om = matstore::stack_omega(X, c.U);
        const Matrix G = (Om * Om.transpose()).llt().solve(Om * Y.transpose()).transpose();
        const double oracle = (Y - G * Om).norm();
        const double ours = (Y - full.apply_A(X) - full.B() * c.U).norm();
        worst_res = std::max(worst_res, std::abs(ours - oracle));
    }
    const double t = seconds_since(t0);
    report(1, worst_err <= 1e-8 && worst_res <= 1e-9 && t < 1.0,
           fmt("max rel error %.3g (<= 1e-8), residual gap %.3g (<= 1e-9), %.3f s (< 1 s)", worst_err, worst_res, t));
}

void criterion_2(const std::vector<RandomCase>& cases) {
    const auto t0 = Clock::now();
    double worst_gap = -1e300;
    int ok = 0;
    for (const auto& c : cases) {
        const matstore::SnapshotSet snap(c.S, c.U, 1.0);
        const auto res = omdc::omdc_identify(snap, 3);
        auto [X, Y] = matstore::split_snapshots(c.S);
        const omdc::OmdcData data(X, Y, c.U);
        const auto dm = dmdc::dmdc_reduced(X, Y, c.U, 3);
        const double f_dmdc = omdc::residual_cost(dm.Phi_r, dm.A_hat, dm.B_hat, data);
        const double f_omdc = omdc::residual_cost(res.model.modes(), res.model.system(), res.model.input(), data);
        worst_gap = std::max(worst_gap, f_omdc - f_dmdc);
        if (f_omdc <= f_dmdc + 1e-10) ++ok;
    }
    const double t = seconds_since(t0);
    report(2, ok == 20 && t < 30.0,
           fmt("%.0f/20 cases with F(OMDc) <= F(DMDc) + 1e-10 (worst F(OMDc) - F(DMDc) = %.3g), %.2f s (< 30 s)",
               ok, worst_gap, t));
}

void criterion_3() {
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const omdc::OmdcData d(randn(20, 40, rng), randn(20, 40, rng), randn(2, 40, rng));
        const Matrix L = testing::rand_orthonormal(20, 3, rng);
        const Matrix g = omdc::grad_F(L, d);
        const double h = 1e-6;
        double err = 0.0;
        for (Index j = 0; j < 3; ++j)
            for (Index i = 0; i < 20; ++i) {
                Matrix a = L, b = L;
                a(i, j) += h;
                b(i, j) -= h;
                const double fd = (omdc::cost_F(a, d) - omdc::cost_F(b, d)) / (2 * h);
                err = std::max(err, std::abs(g(i, j) - fd));
            }
        worst = std::max(worst, err / g.cwiseAbs().maxCoeff());
    }
    report(3, worst <= 1e-6, fmt("max component error / max |component| = %.3g (<= 1e-6)", worst));
}

void criterion_4() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> step(-2.0, 2.0);
    double drift = 0, horiz = 0, norm_err = 0, rot = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = 5 + trial % 20, r = 1 + trial % 4;
        const Matrix L = testing::rand_orthonormal(n, r, rng);
        const Matrix Hraw = randn(n, r, rng);
        const grassmann::TangentDirection H(L, Hraw - L * (L.transpose() * Hraw));
        const Matrix G = grassmann::manifold_gradient(L, randn(n, r, rng));
        const double t = step(rng);
        const Matrix L1 = grassmann::geodesic(L, H, t);
        const auto moved = grassmann::transport(L, H, G, t);
        drift = std::max(drift, (L1.transpose() * L1 - Matrix::Identity(r, r)).norm());
        horiz = std::max({horiz, (L.transpose() * G).norm() / G.norm(),
                          (L1.transpose() * moved.direction).norm() / H.norm(),
                          (L1.transpose() * moved.gradient).norm() / G.norm()});
        norm_err = std::max(norm_err, std::abs(moved.direction.norm() - H.norm()) / H.norm());
        if (trial % 10 == 0) {
            const omdc::OmdcData d(randn(n, 3 * n, rng), randn(n, 3 * n, rng), randn(1, 3 * n, rng));
            const Matrix R = testing::rand_orthogonal(r, rng);
            const double f = omdc::cost_F(L, d);
            rot = std::max(rot, std::abs(omdc::cost_F(L * R, d) - f) / f);
        }
    }
    report(4, drift <= 1e-9 && horiz <= 1e-8 && norm_err <= 1e-9 && rot <= 1e-10,
           fmt("drift %.3g (<= 1e-9), horizontality %.3g (<= 1e-8), transport norm %.3g (<= 1e-9), "
               "rotation %.3g (<= 1e-10)",
               drift, horiz, norm_err, rot));
}

// Wall time per CG iteration of the reduced problem for an n × 101 snapshot matrix.
double per_iteration_seconds(Index n, std::mt19937_64& rng) {
    const Index m = 101;
    const Matrix S = randn(n, m, rng);
    const Matrix U = randn(2, m - 1, rng);
    const auto red = omdc::reduce_problem(S, U);
    const omdc::RidgedObjective obj(red.data);
    grassmann::CgOptions opts;
    opts.max_iters = 60;
    opts.grad_tol = 0.0;
    opts.rel_cost_tol = 0.0;
    opts.stagnation_window = 0;
    const Matrix L0 = decomp::thin_svd_untruncated(red.R_bar).U.leftCols(10);
    const auto t0 = Clock::now();
    const auto res = grassmann::cg_minimize([&](const Matrix& L) { return obj.cost(L); },
                                            [&](const Matrix& L) { return obj.gradient(L); }, L0, opts);
    return seconds_since(t0) / std::max(1, res.report.iterations);
}

void criterion_5() {
    std::mt19937_64 rng(5);
    double worst_cost = 0.0, worst_grad = 0.0;
    for (Index n : {101, 150, 200}) {
        const Index m = 40;
        const Matrix S = randn(n, m, rng);
        const Matrix U = randn(2, m - 1, rng);
        const auto red = omdc::reduce_problem(S, U);
        auto [X, Y] = matstore::split_snapshots(S);
        const omdc::OmdcData full(X, Y, U);
        for (int k = 0; k < 5; ++k) {
            const Matrix Lr = testing::rand_orthonormal(m, 5, rng);
            const Matrix L = red.Q_bar * Lr;
            const double ff = omdc::cost_F(L, full);
            worst_cost = std::max(worst_cost, std::abs(omdc::cost_F(Lr, red.data) - ff) / ff);
            worst_grad = std::max(worst_grad,
                                  testing::rel_err(red.Q_bar * omdc::grad_F(Lr, red.data), omdc::grad_F(L, full)));
        }
    }
    const double t4 = per_iteration_seconds(10000, rng);
    const double t5 = per_iteration_seconds(100000, rng);
    report(5, worst_cost <= 1e-8 && worst_grad <= 1e-8 && t5 < 2.0 * t4,
           fmt("cost gap %.3g, gradient gap %.3g (<= 1e-8); per-iteration %.3g ms (n=1e4) vs %.3g ms (n=1e5)",
               worst_cost, worst_grad, 1e3 * t4, 1e3 * t5));
}

struct Drying {
    dryer::SimulationResult sim;
    Matrix means;  // moisture, temperature
    double seconds = 0.0;
};

void criterion_6(const Drying& d) {
    const auto& S = d.sim.snapshots.states();
    const auto& U = d.sim.snapshots.inputs();
    const bool shapes = S.rows() == 16000 && S.cols() == 101 && U.rows() == 2 && U.cols() == 100;
    const double dt = d.sim.snapshots.dt_sample();
    const Vector T = d.means.row(1).transpose();
    const Vector X = d.means.row(0).transpose();
    auto idx = [&](double t) { return static_cast<Index>(std::lround(t / dt)); };

    // (a) plateau: some sample interval inside (100, 200) s with |dT/dt| < 0.05 K/s.
    double min_rate = 1e300, plateau_T = 0.0;
    for (Index j = idx(100.0); j < idx(200.0); ++j) {
        const double rate = std::abs(T(j + 1) - T(j)) / dt;
        if (rate < min_rate) min_rate = rate, plateau_T = 0.5 * (T(j) + T(j + 1));
    }
    const bool a = min_rate < 0.05 && std::abs(plateau_T - 312.0) <= 15.0;
    // (b)
    const double T_end = T(idx(1250.0));
    const bool b = std::abs(T_end - 375.0) <= 2.0;
    // (c)
    double max_increase = -1e300;
    for (Index j = 1; j < X.size(); ++j) max_increase = std::max(max_increase, X(j) - X(j - 1));
    const bool c = std::abs(X(0) - 0.8) <= 1e-12 && max_increase <= 0.0;
    // (d) each vapor-density step-down (at 100 s and 200 s) is followed by a drop.
    const double drop1 = T(idx(100.0)) - T(idx(112.5));
    const double drop2 = T(idx(200.0)) - T(idx(212.5));
    const bool dd = drop1 > 0.0 && drop2 > 0.0;
    const bool fast = d.seconds < 180.0;
    report(6, shapes && a && b && c && dd && fast,
           fmt("S %.0f x %.0f, U 2 x %.0f; ", S.rows(), S.cols(), U.cols()) +
               fmt("(a) min |dT/dt| %.3g K/s at %.2f K; (b) T(1250) = %.3f K; ", min_rate, plateau_T, T_end) +
               fmt("(c) max moisture increase %.3g; (d) drops %.3f K, %.3f K; ", max_increase, drop1, drop2) +
               fmt("%.1f s (< 180 s)", d.seconds));
}

void criteria_7_to_9(const Drying& d) {
    const auto z = matstore::normalize_fields(d.sim.snapshots);
    auto [X, Y] = matstore::split_snapshots(z.states());

    omdc::OmdcResult om = omdc::omdc_identify(z, 10);
    const auto dm = dmdc::dmdc_reduced(X, Y, z.inputs(), 10);
    const auto dm_model = dmdc::dmdc_as_rom(dm, z.dt_sample(), z.norm_spec(), z.layout());

    const auto traj = romsim::rom_simulate(om.model, d.sim.snapshots.states().col(0), d.sim.snapshots.inputs());
    const auto cmp = romsim::compare(om.model, traj, d.sim.snapshots);
    double worst = 0.0;
    for (const auto& m : cmp.metrics) worst = std::max(worst, m.rel_rms);
    report(7, worst <= 0.05,
           fmt("OMDc r=10 relative RMS: moisture %.3g, temperature %.3g (<= 0.05)", cmp.metrics[0].rel_rms,
               cmp.metrics[1].rel_rms));

    const auto& rep = om.report;
    bool monotone = true;
    for (std::size_t k = 1; k < rep.cost_history.size(); ++k) {
        monotone = monotone && rep.cost_history[k] <= rep.cost_history[k - 1];
    }
    const bool converged = rep.reason == grassmann::Termination::GradientTolerance ||
                           rep.reason == grassmann::Termination::CostStagnation ||
                           rep.reason == grassmann::Termination::RoundingLimit;
    report(8, converged && rep.iterations <= 2000 && monotone,
           fmt("%.0f iterations (<= 2000), ", rep.iterations) + "termination " +
               std::string(grassmann::to_string(rep.reason)) + (monotone ? ", monotone history" : ", NON-monotone"));

    const auto s_om = romsim::eigenvalues(om.model.system());
    const auto s_dm = romsim::eigenvalues(dm_model.system());
    const double dist = romsim::matching_distance(s_om, s_dm);
    double max_abs = 0.0;
    for (auto v : s_om.values) max_abs = std::max(max_abs, std::abs(v));
    report(9, dist > 1e-6 && max_abs <= 1.0 + 1e-3,
           fmt("matched spectral distance %.3g (> 1e-6), max |lambda| OMDc %.5f (<= 1.001)", dist, max_abs));
}

void criterion_10(const Drying& d) {
    const auto& r = d.sim;
    const double loss = r.initial_water_mass - r.final_water_mass;
    const double water = std::abs(loss - r.audit.evaporated_mass) / std::abs(loss);
    const double energy = std::abs(r.audit.heat_in - r.audit.sensible_heat) / std::abs(r.audit.heat_in);
    report(10, water <= 1e-6 && energy <= 1e-6,
           fmt("water balance %.3g, energy balance %.3g (relative, <= 1e-6)", water, energy));
}

// Runs the checks for `ids`; an exception fails all of them.
template <typename F>
void guarded(std::initializer_list<int> ids, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        for (int id : ids) report(id, false, std::string("exception: ") + e.what());
    }
}

}  // namespace

int main() {
    const auto cases = random_cases();
    guarded({1}, [&] { criterion_1(cases); });
    guarded({2}, [&] { criterion_2(cases); });
    guarded({3}, [] { criterion_3(); });
    guarded({4}, [] { criterion_4(); });
    guarded({5}, [] { criterion_5(); });

    std::optional<Drying> run;
    try {
        const auto t0 = Clock::now();
        auto sim = dryer::simulate(dryer::DryerConfig{});
        const double secs = seconds_since(t0);
        Matrix means = romsim::field_means(sim.snapshots.layout(), sim.snapshots.states());
        run.emplace(Drying{std::move(sim), std::move(means), secs});
    } catch (const std::exception& e) {
        for (int id : {6, 7, 8, 9, 10}) report(id, false, std::string("drying run failed: ") + e.what());
        return 1;
    }
    const Drying& d = *run;
    guarded({6}, [&] { criterion_6(d); });
    guarded({7, 8, 9}, [&] { criteria_7_to_9(d); });
    guarded({10}, [&] { criterion_10(d); });
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
