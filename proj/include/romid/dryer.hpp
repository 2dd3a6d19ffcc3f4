#pragma once

// Explicit finite-volume model of a drying wood chip: coupled conduction of
// temperature T and diffusion of moisture ratio Xm (kg water / kg dry wood)
// on a uniform Cartesian box, with convective heating and surface
// evaporation on the boundary faces.
//
//   ρ(Xm) c_p(Xm) ∂T/∂t = ∇·(λ ∇T)
//            ∂Xm/∂t    = ∇·(δ(T) ∇Xm)
//   boundary:  -ρ_dry δ ∇Xm·n = ṁ_w = β (ρ_surface − ρ_∞)
//               λ ∇T·n        = α (T_∞ − T) − Δh(T) ṁ_w
//
// Closures: ρ c_p = ρ_dry (c_p,dry + Xm c_p,water), δ(T) Arrhenius in T,
// ρ_surface from the Magnus saturation pressure times a water activity that
// is linear below the fiber saturation point.

#include "romid/matstore.hpp"

#include <json.hpp>

#include <array>
#include <vector>

namespace romid::dryer {

struct Grid {
    std::array<int, 3> cells{20, 20, 20};
    std::array<double, 3> lengths{5e-3, 10e-3, 20e-3};  // m

    Index cell_count() const { return static_cast<Index>(cells[0]) * cells[1] * cells[2]; }
    double spacing(int axis) const { return lengths[axis] / cells[axis]; }
    double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }
    /// Area of a face normal to `axis`.
    double face_area(int axis) const { return cell_volume() / spacing(axis); }
    Index index(int i, int j, int k) const {
        return static_cast<Index>(i) + static_cast<Index>(cells[0]) * (j + static_cast<Index>(cells[1]) * k);
    }
};

struct MaterialParams {
    double rho_dry = 500.0;      // kg m⁻³
    double cp_dry = 1500.0;      // J kg⁻¹ K⁻¹
    double lambda_dry = 0.12;    // W m⁻¹ K⁻¹
    double delta_eff = 2e-9;     // m² s⁻¹ at the reference temperature
    double alpha = 45.0;         // W m⁻² K⁻¹
    double beta = 0.075;         // m s⁻¹
    std::array<double, 3> anisotropy{1.0, 1.0, 1.0};  // diagonal factors on λ and δ
    double cp_water = 4186.0;    // J kg⁻¹ K⁻¹
    double latent_heat_ref = 2.501e6;  // J kg⁻¹ at 0 °C
    double latent_heat_slope = 2430.0;  // J kg⁻¹ K⁻¹
    double fiber_saturation = 0.3;
    double activation_energy = 40e3;   // J mol⁻¹; 0 gives a constant δ
    double reference_temperature = 298.15;  // K
    bool bidirectional_transfer = false;    // allow condensation (ṁ_w < 0)
    bool evaporation = true;                // false: pure convective heating
};

/// Throws RangeError unless every coefficient is positive (activation energy ≥ 0).
void validate(const MaterialParams& params);

/// Piecewise-constant ambient temperature and vapor density.
class AmbientSchedule {
public:
    struct Breakpoint {
        double start;
        double value;
    };

    AmbientSchedule(std::vector<Breakpoint> temperature, std::vector<Breakpoint> vapor_density);

    /// T∞ = 375 K; ρ∞ = 0.035 / 0.0175 / 0.007 kg m⁻³ from 0 / 100 / 200 s.
    static AmbientSchedule drying_default();

    double temperature(double t) const { return value_at(temperature_, t); }
    double vapor_density(double t) const { return value_at(vapor_, t); }
    const std::vector<Breakpoint>& temperature_breakpoints() const { return temperature_; }
    const std::vector<Breakpoint>& vapor_breakpoints() const { return vapor_; }

private:
    static double value_at(const std::vector<Breakpoint>& b, double t);
    std::vector<Breakpoint> temperature_;
    std::vector<Breakpoint> vapor_;
};

struct Ambient {
    double temperature;    // K
    double vapor_density;  // kg m⁻³
};

struct DryerState {
    std::vector<double> temperature;  // K, per cell
    std::vector<double> moisture;     // per cell
    double time = 0.0;
};

inline constexpr double kWaterMolarMass = 0.018015;  // kg mol⁻¹
inline constexpr double kGasConstant = 8.314462618;  // J mol⁻¹ K⁻¹

/// Saturation pressure from the Magnus formula, Pa.
double saturation_pressure(double T);
/// Vapor density at the surface; T must lie in (250, 450) K.
double surface_vapor_density(double T, double moisture, const MaterialParams& params);
double latent_heat(double T, const MaterialParams& params);
double moisture_diffusivity(double T, const MaterialParams& params);

struct BoundaryFlux {
    double heat;      // W m⁻², into the solid
    double moisture;  // kg m⁻² s⁻¹, leaving the solid
};

BoundaryFlux boundary_flux(double T, double moisture, const Ambient& ambient, const MaterialParams& params);

struct SurfaceState {
    double temperature;
    double moisture;
    BoundaryFlux flux;
};

/// Surface values on a boundary face whose cell centre lies `half_width`
/// inside: the surface flux equals conduction/diffusion across the half cell.
/// `axis` selects the anisotropy factor.
SurfaceState surface_state(double T_cell, double moisture_cell, double half_width, int axis, const Ambient& ambient,
                           const MaterialParams& params);

/// Which of the six box faces exchange heat and vapor (order x−, x+, y−, y+, z−, z+).
using ActiveFaces = std::array<bool, 6>;

/// Largest stable explicit step for temperatures up to `max_temperature`.
double stable_time_step(const Grid& grid, const MaterialParams& params, double max_temperature,
                        const ActiveFaces& faces = {true, true, true, true, true, true});

/// Running totals of the quantities exchanged through the boundary.
struct Audit {
    double evaporated_mass = 0.0;  // kg, Σ ṁ_w A dt
    double heat_in = 0.0;          // J, Σ q A dt
    double sensible_heat = 0.0;    // J, Σ V ρc_p(Xm) ΔT over all steps
};

class Simulator {
public:
    Simulator(Grid grid, MaterialParams params, ActiveFaces faces = {true, true, true, true, true, true});

    /// One explicit Euler step. Throws NumericalError on NaN.
    DryerState step(const DryerState& state, const Ambient& ambient, double dt, Audit* audit = nullptr) const;

    const Grid& grid() const { return grid_; }
    const MaterialParams& params() const { return params_; }
    double water_mass(const DryerState& s) const;

private:
    struct BoundaryFace {
        Index cell;
        int axis;
    };

    Grid grid_;
    MaterialParams params_;
    ActiveFaces faces_;
    std::vector<BoundaryFace> boundary_faces_;
};

struct DryerConfig {
    Grid grid;
    MaterialParams material;
    AmbientSchedule schedule = AmbientSchedule::drying_default();
    ActiveFaces faces{true, true, true, true, true, true};
    double initial_temperature = 298.15;
    double initial_moisture = 0.8;
    double dt = 0.1;
    double t_end = 1250.0;
    double sample_interval = 12.5;
};

DryerConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DryerConfig& c);

struct SimulationResult {
    matstore::SnapshotSet snapshots;  // moisture rows, then temperature rows
    Audit audit;
    double initial_water_mass = 0.0;
    double final_water_mass = 0.0;
    Index steps = 0;
    double wall_seconds = 0.0;
};

/// Runs the configured experiment. Throws StabilityError if dt exceeds the
/// explicit bound and NumericalError (with the step index) on NaN.
SimulationResult simulate(const DryerConfig& config);

/// Initial uniform state.
DryerState initial_state(const DryerConfig& config);

}  // namespace romid::dryer
