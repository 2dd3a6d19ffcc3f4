#include "romid/dryer.hpp"

#include "romid/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace romid::dryer {

namespace {

double harmonic(double a, double b) {
    const double s = a + b;
    return s > 0.0 ? 2.0 * a * b / s : 0.0;
}

void validate_breakpoints(const std::vector<AmbientSchedule::Breakpoint>& b, const char* what) {
    if (b.empty() || b.front().start != 0.0) {
        throw RangeError(std::string(what) + " schedule must start at t = 0");
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (!std::isfinite(b[i].start) || !std::isfinite(b[i].value)) {
            throw RangeError(std::string(what) + " schedule has non-finite entries");
        }
        if (i > 0 && !(b[i].start > b[i - 1].start)) {
            throw RangeError(std::string(what) + " breakpoints must be strictly increasing");
        }
    }
}

// Number of steps of size dt that make up `span`; throws unless exact.
Index whole_steps(double span, double dt, const char* what) {
    const double ratio = span / dt;
    const double steps = std::round(ratio);
    if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
        throw RangeError(std::string(what) + " is not a whole number of time steps");
    }
    return static_cast<Index>(steps);
}

void validate(const Grid& g) {
    for (int a = 0; a < 3; ++a) {
        if (g.cells[a] < 1) throw RangeError("grid needs at least one cell per axis");
        if (!(g.lengths[a] > 0.0)) throw RangeError("box lengths must be positive");
    }
}

}  // namespace

void validate(const MaterialParams& p) {
    const double positive[] = {p.rho_dry,  p.cp_dry,           p.lambda_dry,        p.delta_eff,
                               p.alpha,    p.beta,             p.cp_water,          p.latent_heat_ref,
                               p.fiber_saturation, p.reference_temperature, p.anisotropy[0], p.anisotropy[1],
                               p.anisotropy[2]};
    for (double v : positive) {
        if (!(v > 0.0) || !std::isfinite(v)) throw RangeError("material parameters must be positive and finite");
    }
    if (!(p.latent_heat_slope >= 0.0) || !(p.activation_energy >= 0.0)) {
        throw RangeError("latent-heat slope and activation energy must be nonnegative");
    }
}

AmbientSchedule::AmbientSchedule(std::vector<Breakpoint> temperature, std::vector<Breakpoint> vapor_density)
    : temperature_(std::move(temperature)), vapor_(std::move(vapor_density)) {
    validate_breakpoints(temperature_, "temperature");
    validate_breakpoints(vapor_, "vapor density");
}

AmbientSchedule AmbientSchedule::drying_default() {
    return AmbientSchedule({{0.0, 375.0}}, {{0.0, 0.035}, {100.0, 0.0175}, {200.0, 0.007}});
}

double AmbientSchedule::value_at(const std::vector<Breakpoint>& b, double t) {
    auto it = std::upper_bound(b.begin(), b.end(), t, [](double x, const Breakpoint& p) { return x < p.start; });
    return it == b.begin() ? b.front().value : std::prev(it)->value;
}

double saturation_pressure(double T) {
    const double theta = T - 273.15;
    return 611.2 * std::exp(17.62 * theta / (243.12 + theta));
}

double surface_vapor_density(double T, double moisture, const MaterialParams& params) {
    if (!(T > 250.0 && T < 450.0)) {
        throw RangeError("surface temperature " + std::to_string(T) + " K outside (250, 450) K");
    }
    const double activity = std::clamp(moisture / params.fiber_saturation, 0.0, 1.0);
    return activity * saturation_pressure(T) * kWaterMolarMass / (kGasConstant * T);
}

double latent_heat(double T, const MaterialParams& params) {
    return params.latent_heat_ref - params.latent_heat_slope * (T - 273.15);
}

double moisture_diffusivity(double T, const MaterialParams& params) {
    if (params.activation_energy == 0.0) return params.delta_eff;
    return params.delta_eff *
           std::exp(-params.activation_energy / kGasConstant * (1.0 / T - 1.0 / params.reference_temperature));
}

BoundaryFlux boundary_flux(double T, double moisture, const Ambient& ambient, const MaterialParams& params) {
    double mdot = 0.0;
    if (params.evaporation) {
        mdot = params.beta * (surface_vapor_density(T, moisture, params) - ambient.vapor_density);
        if (!params.bidirectional_transfer) mdot = std::max(mdot, 0.0);
    }
    return {params.alpha * (ambient.temperature - T) - latent_heat(T, params) * mdot, mdot};
}

SurfaceState surface_state(double T_cell, double moisture_cell, double half_width, int axis, const Ambient& ambient,
                           const MaterialParams& params) {
    const double gT = params.lambda_dry * params.anisotropy[axis] / half_width;
    const double gX = params.rho_dry * moisture_diffusivity(T_cell, params) * params.anisotropy[axis] / half_width;
    const double beta = params.beta;
    const double rho_inf = ambient.vapor_density;

    // Surface moisture and ṁ for a given T_s from ṁ(T_s, X_s) = gX (X_c − X_s),
    // which is piecewise linear in X_s; also returns dṁ/dT_s.
    struct Transfer {
        double Xs, mdot, dmdot;
    };
    auto transfer = [&](double Ts) -> Transfer {
        if (!params.evaporation) return {moisture_cell, 0.0, 0.0};
        const double rho_sat = surface_vapor_density(Ts, params.fiber_saturation, params);
        const double theta = Ts - 273.15;
        const double drho_sat = rho_sat * (17.62 * 243.12 / ((243.12 + theta) * (243.12 + theta)) - 1.0 / Ts);
        const double k = beta * rho_sat / params.fiber_saturation;
        Transfer t;
        t.Xs = (gX * moisture_cell + beta * rho_inf) / (gX + k);
        if (t.Xs <= params.fiber_saturation) {
            t.mdot = gX * (k * moisture_cell - beta * rho_inf) / (gX + k);
            t.dmdot = gX * (gX * moisture_cell + beta * rho_inf) / ((gX + k) * (gX + k)) * beta * drho_sat /
                      params.fiber_saturation;
        } else {
            t.mdot = beta * (rho_sat - rho_inf);
            t.dmdot = beta * drho_sat;
            t.Xs = moisture_cell - t.mdot / gX;
        }
        if (t.mdot < 0.0 && !params.bidirectional_transfer) return {moisture_cell, 0.0, 0.0};
        return t;
    };

    // R(T_s) = gT (T_s − T_c) − α (T∞ − T_s) + Δh(T_s) ṁ(T_s) is increasing;
    // Newton from the cell temperature, falling back to bisection.
    double lo = 250.0 + 1e-9, hi = 450.0 - 1e-9;
    double Ts = std::clamp(T_cell, lo, hi);
    Transfer tr{};
    for (int it = 0; it < 100; ++it) {
        tr = transfer(Ts);
        const double dh = latent_heat(Ts, params);
        const double r = gT * (Ts - T_cell) - params.alpha * (ambient.temperature - Ts) + dh * tr.mdot;
        if (r == 0.0) break;
        (r < 0.0 ? lo : hi) = Ts;
        const double slope = gT + params.alpha - params.latent_heat_slope * tr.mdot + dh * tr.dmdot;
        double next = slope > 0.0 ? Ts - r / slope : 0.5 * (lo + hi);
        if (std::abs(next - Ts) <= 1e-12 * Ts) break;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        Ts = next;
        if (hi - lo <= 1e-12 * Ts) break;
    }
    if (!(Ts > 250.0 + 1e-6 && Ts < 450.0 - 1e-6)) throw RangeError("surface temperature outside (250, 450) K");
    tr = transfer(Ts);
    return {Ts, tr.Xs,
            BoundaryFlux{params.alpha * (ambient.temperature - Ts) - latent_heat(Ts, params) * tr.mdot, tr.mdot}};
}

double stable_time_step(const Grid& grid, const MaterialParams& params, double max_temperature,
                        const ActiveFaces& faces) {
    validate(grid);
    validate(params);
    const double rho_cp = params.rho_dry * params.cp_dry;  // smallest ρc_p (Xm ≥ 0)
    const double delta = moisture_diffusivity(max_temperature, params);
    double heat_rate = 0.0;
    double moisture_rate = 0.0;
    double exposure = 0.0;  // largest exposed area / volume of any cell
    double min_h2 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double h = grid.spacing(a);
        min_h2 = std::min(min_h2, h * h);
        heat_rate += 2.0 * params.lambda_dry * params.anisotropy[a] / (rho_cp * h * h);
        moisture_rate += 2.0 * delta * params.anisotropy[a] / (h * h);
        const int sides = (faces[2 * a] ? 1 : 0) + (faces[2 * a + 1] ? 1 : 0);
        exposure += std::min(sides, grid.cells[a] == 1 ? sides : 1) / h;
    }
    heat_rate += params.alpha * exposure / rho_cp;
    if (params.evaporation) {
        // Linearized surface transfer below the fiber saturation point.
        const double T = std::clamp(max_temperature, 250.0 + 1e-9, 450.0 - 1e-9);
        const double rho_sat = saturation_pressure(T) * kWaterMolarMass / (kGasConstant * T);
        moisture_rate += params.beta * rho_sat / (params.fiber_saturation * params.rho_dry) * exposure;
    }
    const double exact = 1.0 / std::max(heat_rate, moisture_rate);
    // Conventional bound with safety factor 0.4.
    const double diffusivity = std::max(params.lambda_dry * *std::max_element(params.anisotropy.begin(),
                                                                                params.anisotropy.end()) /
                                            rho_cp,
                                        delta);
    const double conventional = 0.4 * min_h2 / diffusivity;
    return std::min(exact, conventional);
}

Simulator::Simulator(Grid grid, MaterialParams params, ActiveFaces faces)
    : grid_(grid), params_(params), faces_(faces) {
    validate(grid_);
    validate(params_);
    const auto& c = grid_.cells;
    for (int k = 0; k < c[2]; ++k) {
        for (int j = 0; j < c[1]; ++j) {
            for (int i = 0; i < c[0]; ++i) {
                const int pos[3] = {i, j, k};
                for (int a = 0; a < 3; ++a) {
                    if (pos[a] == 0 && faces_[2 * a]) boundary_faces_.push_back({grid_.index(i, j, k), a});
                    if (pos[a] == c[a] - 1 && faces_[2 * a + 1]) boundary_faces_.push_back({grid_.index(i, j, k), a});
                }
            }
        }
    }
}

double Simulator::water_mass(const DryerState& s) const {
    double sum = 0.0;
    for (double x : s.moisture) sum += x;
    return params_.rho_dry * grid_.cell_volume() * sum;
}

DryerState Simulator::step(const DryerState& state, const Ambient& ambient, double dt, Audit* audit) const {
    const auto n = static_cast<std::size_t>(grid_.cell_count());
    if (state.temperature.size() != n || state.moisture.size() != n) {
        throw DimensionMismatch("state does not match the grid");
    }
    const auto& T = state.temperature;
    const auto& X = state.moisture;
    const double V = grid_.cell_volume();
    const double rho_dry = params_.rho_dry;

    std::vector<double> delta(n);
    for (std::size_t c = 0; c < n; ++c) delta[c] = moisture_diffusivity(T[c], params_);

    // Net heat flow (W) and water mass flow (kg/s) into each cell.
    std::vector<double> heat(n, 0.0);
    std::vector<double> water(n, 0.0);
    const auto& cells = grid_.cells;
    const Index stride[3] = {1, cells[0], static_cast<Index>(cells[0]) * cells[1]};
    for (int a = 0; a < 3; ++a) {
        const double h = grid_.spacing(a);
        const double g = grid_.face_area(a) / h * params_.anisotropy[a];
        const double lambda = params_.lambda_dry;  // λ(Xm) = λ_dry, so its face average is λ_dry
        for (int k = 0; k < cells[2]; ++k) {
            for (int j = 0; j < cells[1]; ++j) {
                for (int i = 0; i < cells[0]; ++i) {
                    const int pos[3] = {i, j, k};
                    if (pos[a] == cells[a] - 1) continue;
                    const auto lo = static_cast<std::size_t>(grid_.index(i, j, k));
                    const auto hi = lo + static_cast<std::size_t>(stride[a]);
                    const double q = g * lambda * (T[hi] - T[lo]);
                    const double w = g * rho_dry * harmonic(delta[lo], delta[hi]) * (X[hi] - X[lo]);
                    heat[lo] += q;
                    heat[hi] -= q;
                    water[lo] += w;
                    water[hi] -= w;
                }
            }
        }
    }

    double heat_in = 0.0;
    double evaporated = 0.0;
    for (const auto& face : boundary_faces_) {
        const auto c = static_cast<std::size_t>(face.cell);
        const double area = grid_.face_area(face.axis);
        const BoundaryFlux f =
            surface_state(T[c], X[c], 0.5 * grid_.spacing(face.axis), face.axis, ambient, params_).flux;
        heat[c] += f.heat * area;
        water[c] -= f.moisture * area;
        heat_in += f.heat * area * dt;
        evaporated += f.moisture * area * dt;
    }

    DryerState next;
    next.temperature.resize(n);
    next.moisture.resize(n);
    next.time = state.time + dt;
    double sensible = 0.0;
    bool finite = true;
    for (std::size_t c = 0; c < n; ++c) {
        const double rho_cp = rho_dry * (params_.cp_dry + X[c] * params_.cp_water);
        const double dT = dt * heat[c] / (V * rho_cp);
        next.temperature[c] = T[c] + dT;
        next.moisture[c] = X[c] + dt * water[c] / (V * rho_dry);
        sensible += V * rho_cp * dT;
        finite = finite && std::isfinite(next.temperature[c]) && std::isfinite(next.moisture[c]);
    }
    if (!finite) throw NumericalError("non-finite state at t = " + std::to_string(next.time) + " s");
    if (audit) {
        audit->heat_in += heat_in;
        audit->evaporated_mass += evaporated;
        audit->sensible_heat += sensible;
    }
    return next;
}

DryerState initial_state(const DryerConfig& config) {
    const auto n = static_cast<std::size_t>(config.grid.cell_count());
    DryerState s;
    s.temperature.assign(n, config.initial_temperature);
    s.moisture.assign(n, config.initial_moisture);
    return s;
}

SimulationResult simulate(const DryerConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    if (!(config.dt > 0.0) || !(config.t_end >= 0.0) || !(config.sample_interval > 0.0)) {
        throw RangeError("dt and sample interval must be positive, t_end nonnegative");
    }
    if (!(config.initial_temperature > 0.0) || !(config.initial_moisture >= 0.0)) {
        throw RangeError("initial temperature must be positive and moisture nonnegative");
    }
    const Simulator sim(config.grid, config.material, config.faces);

    double max_T = config.initial_temperature;
    for (const auto& b : config.schedule.temperature_breakpoints()) max_T = std::max(max_T, b.value);
    const double limit = stable_time_step(config.grid, config.material, max_T, config.faces);
    if (config.dt > limit) {
        throw StabilityError("dt = " + std::to_string(config.dt) + " s exceeds the explicit stability limit " +
                             std::to_string(limit) + " s");
    }

    const Index total = whole_steps(config.t_end, config.dt, "t_end");
    const Index every = whole_steps(config.sample_interval, config.dt, "sample interval");
    if (every < 1) throw RangeError("sample interval is shorter than dt");
    const Index samples = total / every + 1;

    const Index cells = config.grid.cell_count();
    Matrix S(2 * cells, samples);
    Matrix U(2, samples - 1);
    auto store = [&](const DryerState& s, Index col) {
        S.col(col).head(cells) = Eigen::Map<const Vector>(s.moisture.data(), cells);
        S.col(col).tail(cells) = Eigen::Map<const Vector>(s.temperature.data(), cells);
    };

    SimulationResult result{matstore::SnapshotSet(Matrix::Zero(1, 1), Matrix::Zero(0, 0), 1.0), {}, 0.0, 0.0, 0, 0.0};
    DryerState state = initial_state(config);
    result.initial_water_mass = sim.water_mass(state);
    store(state, 0);
    for (Index k = 0; k < total; ++k) {
        const double t = static_cast<double>(k) * config.dt;
        state.time = t;
        const Ambient ambient{config.schedule.temperature(t), config.schedule.vapor_density(t)};
        try {
            state = sim.step(state, ambient, config.dt, &result.audit);
        } catch (const NumericalError& e) {
            throw NumericalError("step " + std::to_string(k) + ": " + e.what());
        }
        if ((k + 1) % every == 0) store(state, (k + 1) / every);
    }
    state.time = static_cast<double>(total) * config.dt;
    for (Index j = 0; j + 1 < samples; ++j) {
        const double t = static_cast<double>(j) * config.sample_interval;
        U(0, j) = config.schedule.temperature(t);
        U(1, j) = config.schedule.vapor_density(t);
    }
    result.final_water_mass = sim.water_mass(state);
    result.steps = total;
    result.snapshots = matstore::SnapshotSet(
        std::move(S), std::move(U), config.sample_interval,
        {matstore::FieldSpan{"moisture", 0, cells}, matstore::FieldSpan{"temperature", cells, cells}});
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<AmbientSchedule::Breakpoint> breakpoints_from_json(const nlohmann::json& j) {
    std::vector<AmbientSchedule::Breakpoint> b;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw FormatError("schedule entries must be [start, value] pairs");
        b.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    return b;
}

nlohmann::json breakpoints_to_json(const std::vector<AmbientSchedule::Breakpoint>& b) {
    auto j = nlohmann::json::array();
    for (const auto& p : b) j.push_back({p.start, p.value});
    return j;
}

}  // namespace

DryerConfig config_from_json(const nlohmann::json& j) {
    DryerConfig c;
    try {
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            read_if(g, "cells", c.grid.cells);
            read_if(g, "lengths", c.grid.lengths);
        }
        if (j.contains("material")) {
            const auto& m = j.at("material");
            auto& p = c.material;
            read_if(m, "rho_dry", p.rho_dry);
            read_if(m, "cp_dry", p.cp_dry);
            read_if(m, "lambda_dry", p.lambda_dry);
            read_if(m, "delta_eff", p.delta_eff);
            read_if(m, "alpha", p.alpha);
            read_if(m, "beta", p.beta);
            read_if(m, "anisotropy", p.anisotropy);
            read_if(m, "cp_water", p.cp_water);
            read_if(m, "latent_heat_ref", p.latent_heat_ref);
            read_if(m, "latent_heat_slope", p.latent_heat_slope);
            read_if(m, "fiber_saturation", p.fiber_saturation);
            read_if(m, "activation_energy", p.activation_energy);
            read_if(m, "reference_temperature", p.reference_temperature);
            read_if(m, "bidirectional_transfer", p.bidirectional_transfer);
            read_if(m, "evaporation", p.evaporation);
        }
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            c.schedule = AmbientSchedule(breakpoints_from_json(s.at("temperature")),
                                         breakpoints_from_json(s.at("vapor_density")));
        }
        read_if(j, "faces", c.faces);
        if (j.contains("initial")) {
            read_if(j.at("initial"), "temperature", c.initial_temperature);
            read_if(j.at("initial"), "moisture", c.initial_moisture);
        }
        read_if(j, "dt", c.dt);
        read_if(j, "t_end", c.t_end);
        read_if(j, "sample_interval", c.sample_interval);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad drying config: ") + e.what());
    }
    validate(c.grid);
    validate(c.material);
    return c;
}

nlohmann::json to_json(const DryerConfig& c) {
    const auto& p = c.material;
    return {
        {"grid", {{"cells", c.grid.cells}, {"lengths", c.grid.lengths}}},
        {"material",
         {{"rho_dry", p.rho_dry},
          {"cp_dry", p.cp_dry},
          {"lambda_dry", p.lambda_dry},
          {"delta_eff", p.delta_eff},
          {"alpha", p.alpha},
          {"beta", p.beta},
          {"anisotropy", p.anisotropy},
          {"cp_water", p.cp_water},
          {"latent_heat_ref", p.latent_heat_ref},
          {"latent_heat_slope", p.latent_heat_slope},
          {"fiber_saturation", p.fiber_saturation},
          {"activation_energy", p.activation_energy},
          {"reference_temperature", p.reference_temperature},
          {"bidirectional_transfer", p.bidirectional_transfer},
          {"evaporation", p.evaporation}}},
        {"schedule",
         {{"temperature", breakpoints_to_json(c.schedule.temperature_breakpoints())},
          {"vapor_density", breakpoints_to_json(c.schedule.vapor_breakpoints())}}},
        {"faces", c.faces},
        {"initial", {{"temperature", c.initial_temperature}, {"moisture", c.initial_moisture}}},
        {"dt", c.dt},
        {"t_end", c.t_end},
        {"sample_interval", c.sample_interval},
    };
}

}  // namespace romid::dryer
