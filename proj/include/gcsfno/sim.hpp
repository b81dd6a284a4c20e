#ifndef GCSFNO_SIM_HPP
#define GCSFNO_SIM_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gcsfno/field.hpp"

namespace gcsfno {

inline constexpr double kSecondsPerMonth = 2629800.0;  // 365.25/12 days
inline constexpr double kPascalPerPsia = 6894.757;

/// Horizontal/vertical permeability (m^2) and porosity (fraction) on the
/// grid. Vertical permeability is anisotropy_ratio times horizontal.
struct RockFields {
    Field2D perm_h;
    Field2D perm_v;
    Field2D poro;

    void validate(const Grid& grid) const;
};

struct FluidProps {
    double rho_w = 1000.0;  // kg/m^3
    double rho_g = 700.0;   // kg/m^3 (CO2 at storage conditions)
    double mu_w = 5e-4;     // Pa*s
    double mu_g = 6e-5;     // Pa*s
    double c_w = 4e-10;     // 1/Pa
    double c_g = 5e-9;      // 1/Pa
    double c_r = 1e-10;     // 1/Pa (pore-volume compressibility)
    double g = 9.81;        // m/s^2

    void validate() const;
};

/// Corey-type relative permeability curves.
struct RelPermModel {
    double swc = 0.2;   // connate water saturation
    double sgr = 0.05;  // residual gas saturation
    double krw0 = 1.0;
    double krg0 = 1.0;
    double nw = 2.0;
    double ng = 2.0;

    void validate() const;
};

/// (krw, krg) at the given gas saturation; inputs outside [0, 1] are
/// clamped through the effective-saturation mapping.
std::pair<double, double> corey_relperm(double sg, const RelPermModel& model);

/// Stationary Gaussian field G with the requested log10 moments and
/// separable exponential correlation, returned as 10^G. Deterministic per
/// seed.
Field2D gaussian_log_perm(const Grid& grid, double corr_len_x, double corr_len_z,
                          double log10_mean, double log10_std, std::uint64_t seed);

/// phi = a + b*log10(K / k_ref), clamped to [lo, hi].
Field2D porosity_from_perm(const Field2D& perm, double a, double b, double k_ref, double lo,
                           double hi);

enum class WellKind { injector, producer };

struct WellSpec {
    WellKind kind = WellKind::injector;
    std::string name;
    std::vector<std::size_t> cells;  // flat grid indices (x fastest)
    // Injectors: reservoir-condition CO2 rate (m^3/s), one entry per month
    // of the injection period (a single entry means a constant rate).
    std::vector<double> rate_schedule;
    // Producers: bottom-hole pressure (Pa) at bhp_datum_depth, plus a
    // Peaceman-style well index (m^3) per perforated cell.
    double bhp = 0.0;
    double bhp_datum_depth = 0.0;  // m
    std::vector<double> well_index;

    void validate(const Grid& grid) const;
    /// Rate in force during the month starting at t_start_months.
    double rate_during(double t_start_months) const;
};

/// Well index for a vertical-perforation cell in the cross-section,
/// 2*pi*K*dy / ln(r_eq / r_w) with r_eq = 0.14*sqrt(dx^2 + dz^2).
double peaceman_well_index(double perm, double dx, double dz, double dy, double r_w = 0.1);

struct Schedule {
    int t_inj = 360;         // months
    int t_total = 960;       // months
    int snapshot_every = 1;  // months

    void validate() const;
    int n_snapshots() const { return t_total / snapshot_every; }
};

struct SimState {
    Field2D p;   // Pa
    Field2D sg;  // CO2 saturation
    double t_months = 0.0;
};

struct SimCase {
    std::string id;
    Grid grid;
    RockFields rock;
    FluidProps fluids;
    RelPermModel relperm;
    std::vector<WellSpec> wells;
    Schedule schedule;
    double p_datum = 2.0e7;  // Pa at mid-depth
    std::map<std::string, std::string> tags;  // recorded in the sidecar
};

/// Water-hydrostatic pressure around p_datum at mid-depth, no CO2.
SimState hydrostatic_init(const Grid& grid, const FluidProps& fluids, double p_datum);

/// Implicit total-fluid pressure step: two-point flux approximation with
/// harmonic inter-cell transmissibilities, phase mobilities upwinded by the
/// current-state phase potentials and frozen, per-phase gravity on vertical
/// faces, rate sources at injectors and WI*lambda*(p - bhp) sinks at
/// producers. Solved to relative residual 1e-10.
Field2D pressure_solve(const SimState& state, const Grid& grid, const RockFields& rock,
                       const FluidProps& fluids, const RelPermModel& relperm,
                       const std::vector<WellSpec>& wells, double dt_s);

struct TransportReport {
    double injected_m3 = 0.0;
    double produced_m3 = 0.0;  // CO2 taken by producers (signed)
    double clamped_m3 = 0.0;   // saturation-bound repair volume
    int n_substeps = 0;
};

/// Explicit upwind CO2 transport against the new pressure field,
/// sub-stepped so every sub-step respects CFL <= 0.5 for both the viscous
/// and the gravity-segregation wave speeds. Mobilities are refreshed each
/// sub-step; upwind directions follow the phase potentials of p_new.
Field2D saturation_update(const SimState& state, const Field2D& p_new, const Grid& grid,
                          const RockFields& rock, const FluidProps& fluids,
                          const RelPermModel& relperm, const std::vector<WellSpec>& wells,
                          double dt_s, TransportReport* report = nullptr);

struct SimResult {
    std::string case_id;
    std::vector<SimState> snapshots;
    std::vector<double> injected_volume_series;  // cumulative m^3 per snapshot
    std::vector<double> produced_volume_series;  // cumulative m^3 per snapshot
    std::vector<double> balance_error_series;    // relative, per snapshot
    double clamped_m3 = 0.0;
    double wall_time_s = 0.0;
};

/// Time-marches pressure/saturation at a one-month step from hydrostatic
/// initial conditions. Wells are active while the step ends at or before
/// t_inj and shut afterward. The CO2 volume balance is verified at every
/// snapshot.
SimResult simulate(const SimCase& c);

/// Total CO2 volume in place, sum of cell_volume * phi * sg.
double co2_in_place(const Grid& grid, const RockFields& rock, const Field2D& sg);

}  // namespace gcsfno

#endif
