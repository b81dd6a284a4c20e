#include <algorithm>
#include <cmath>
#include <random>

#include "gcsfno/sim.hpp"

namespace gcsfno {

void RockFields::validate(const Grid& grid) const {
    const std::size_t n = grid.n_cells();
    if (perm_h.v.size() != n || perm_v.v.size() != n || poro.v.size() != n)
        throw ConfigError("rock fields do not match the grid");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(perm_h.v[i] > 0.0) || !(perm_v.v[i] > 0.0))
            throw ConfigError("permeability must be positive everywhere");
        if (!(poro.v[i] > 0.0) || !(poro.v[i] < 1.0))
            throw ConfigError("porosity must lie in (0, 1)");
    }
}

void FluidProps::validate() const {
    if (!(rho_w > rho_g) || !(rho_g > 0.0))
        throw ConfigError("fluids: need rho_w > rho_g > 0");
    if (!(mu_w > 0.0) || !(mu_g > 0.0)) throw ConfigError("fluids: viscosities must be positive");
    if (c_w < 0.0 || c_g < 0.0 || c_r < 0.0)
        throw ConfigError("fluids: compressibilities must be non-negative");
    if (g < 0.0) throw ConfigError("fluids: gravity must be non-negative");
}

void RelPermModel::validate() const {
    if (swc < 0.0 || sgr < 0.0 || swc + sgr >= 1.0)
        throw ConfigError("relperm: need swc, sgr >= 0 and swc + sgr < 1");
    if (!(krw0 > 0.0) || krw0 > 1.0 || !(krg0 > 0.0) || krg0 > 1.0)
        throw ConfigError("relperm: endpoints must lie in (0, 1]");
    if (nw < 1.0 || ng < 1.0) throw ConfigError("relperm: exponents must be >= 1");
}

std::pair<double, double> corey_relperm(double sg, const RelPermModel& m) {
    double s_star = (1.0 - sg - m.swc) / (1.0 - m.swc - m.sgr);
    s_star = std::clamp(s_star, 0.0, 1.0);
    const double krw = m.krw0 * std::pow(s_star, m.nw);
    const double krg = m.krg0 * std::pow(1.0 - s_star, m.ng);
    return {krw, krg};
}

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

Field2D gaussian_log_perm(const Grid& grid, double corr_len_x, double corr_len_z,
                          double log10_mean, double log10_std, std::uint64_t seed) {
    grid.validate();
    if (!std::isfinite(corr_len_x) || !std::isfinite(corr_len_z) || !std::isfinite(log10_mean) ||
        !std::isfinite(log10_std))
        throw ConfigError("permeability field: parameters must be finite");
    if (corr_len_x <= 0.0 || corr_len_z <= 0.0)
        throw ConfigError("permeability field: correlation lengths must be positive");
    if (log10_std < 0.0) throw ConfigError("permeability field: log10_std must be >= 0");

    const std::size_t nx = grid.nx, nz = grid.nz;
    Field2D g(nx, nz);
    std::mt19937_64 rng(seed);
    for (double& v : g.v) v = standard_normal(rng);

    // Exponential correlation is an AR(1) recursion along each axis; two
    // sweeps give the separable product correlation with unit marginal
    // variance preserved.
    const double rx = std::exp(-grid.dx / corr_len_x);
    const double sx = std::sqrt(1.0 - rx * rx);
    for (std::size_t iz = 0; iz < nz; ++iz)
        for (std::size_t ix = 1; ix < nx; ++ix)
            g.at(ix, iz) = rx * g.at(ix - 1, iz) + sx * g.at(ix, iz);
    const double rz = std::exp(-grid.dz / corr_len_z);
    const double sz = std::sqrt(1.0 - rz * rz);
    for (std::size_t iz = 1; iz < nz; ++iz)
        for (std::size_t ix = 0; ix < nx; ++ix)
            g.at(ix, iz) = rz * g.at(ix, iz - 1) + sz * g.at(ix, iz);

    Field2D out(nx, nz);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.v[i] = std::pow(10.0, log10_mean + log10_std * g.v[i]);
    return out;
}

Field2D porosity_from_perm(const Field2D& perm, double a, double b, double k_ref, double lo,
                           double hi) {
    if (!(k_ref > 0.0)) throw ConfigError("porosity law: reference permeability must be positive");
    if (!(lo > 0.0) || !(hi < 1.0) || !(lo <= hi))
        throw ConfigError("porosity law: clamp bounds must satisfy 0 < lo <= hi < 1");
    Field2D out(perm.nx, perm.nz);
    for (std::size_t i = 0; i < perm.size(); ++i)
        out.v[i] = std::clamp(a + b * std::log10(perm.v[i] / k_ref), lo, hi);
    return out;
}

void WellSpec::validate(const Grid& grid) const {
    if (cells.empty()) throw ConfigError("well '" + name + "': no perforated cells");
    for (std::size_t c : cells)
        if (c >= grid.n_cells())
            throw ConfigError("well '" + name + "': perforated cell outside the grid");
    if (kind == WellKind::injector) {
        if (rate_schedule.empty())
            throw ConfigError("well '" + name + "': injector without a rate schedule");
        for (double r : rate_schedule)
            if (!(r >= 0.0) || !std::isfinite(r))
                throw ConfigError("well '" + name + "': injection rates must be >= 0");
    } else {
        if (!(bhp > 0.0)) throw ConfigError("well '" + name + "': producer needs a positive bhp");
        if (well_index.size() != cells.size())
            throw ConfigError("well '" + name + "': one well index per perforated cell required");
        for (double wi : well_index)
            if (!(wi > 0.0)) throw ConfigError("well '" + name + "': well index must be positive");
    }
}

double WellSpec::rate_during(double t_start_months) const {
    if (kind != WellKind::injector || rate_schedule.empty()) return 0.0;
    const auto month = static_cast<std::size_t>(std::max(0.0, t_start_months + 1e-9));
    return rate_schedule[std::min(month, rate_schedule.size() - 1)];
}

double peaceman_well_index(double perm, double dx, double dz, double dy, double r_w) {
    const double r_eq = 0.14 * std::sqrt(dx * dx + dz * dz);
    if (!(r_eq > r_w)) throw ConfigError("well index: equivalent radius must exceed r_w");
    return 2.0 * M_PI * perm * dy / std::log(r_eq / r_w);
}

void Schedule::validate() const {
    if (!(t_inj > 0) || !(t_inj < t_total))
        throw ConfigError("schedule: need 0 < t_inj < t_total (months)");
    if (snapshot_every < 1 || t_total % snapshot_every != 0)
        throw ConfigError("schedule: snapshot cadence must divide t_total");
}

SimState hydrostatic_init(const Grid& grid, const FluidProps& fluids, double p_datum) {
    if (!(p_datum > 0.0)) throw ConfigError("initial datum pressure must be positive");
    SimState s;
    s.p = Field2D(grid.nx, grid.nz);
    s.sg = Field2D(grid.nx, grid.nz);
    s.t_months = 0.0;
    const double z_mid = grid.mid_depth();
    for (std::size_t iz = 0; iz < grid.nz; ++iz) {
        const double p = p_datum + fluids.rho_w * fluids.g * (grid.cell_depth(iz) - z_mid);
        for (std::size_t ix = 0; ix < grid.nx; ++ix) s.p.at(ix, iz) = p;
    }
    return s;
}

double co2_in_place(const Grid& grid, const RockFields& rock, const Field2D& sg) {
    const double vc = grid.cell_volume();
    double acc = 0.0;
    for (std::size_t i = 0; i < sg.size(); ++i) acc += vc * rock.poro.v[i] * sg.v[i];
    return acc;
}

}  // namespace gcsfno
