#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gcsfno/sim.hpp"

namespace gcsfno {

namespace {

// Structured-grid face data shared by the pressure and transport operators.
// Faces connect cell i (lower index) to cell j; x-faces are horizontal
// neighbours, z-faces vertical (j directly below i, so Z_j - Z_i = +dz).
struct Face {
    std::size_t i, j;
    double trans;     // geometric transmissibility, harmonic permeability
    double dz_drop;   // Z_i - Z_j (0 for x-faces, -dz for z-faces)
};

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

std::vector<Face> build_faces(const Grid& grid, const RockFields& rock) {
    std::vector<Face> faces;
    faces.reserve((grid.nx - 1) * grid.nz + grid.nx * (grid.nz - 1));
    const double tx_geom = grid.dy * grid.dz / grid.dx;
    for (std::size_t iz = 0; iz < grid.nz; ++iz)
        for (std::size_t ix = 0; ix + 1 < grid.nx; ++ix) {
            const std::size_t i = grid.idx(ix, iz), j = grid.idx(ix + 1, iz);
            faces.push_back({i, j, tx_geom * harmonic(rock.perm_h.v[i], rock.perm_h.v[j]), 0.0});
        }
    const double tz_geom = grid.dy * grid.dx / grid.dz;
    for (std::size_t iz = 0; iz + 1 < grid.nz; ++iz)
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const std::size_t i = grid.idx(ix, iz), j = grid.idx(ix, iz + 1);
            faces.push_back(
                {i, j, tz_geom * harmonic(rock.perm_v.v[i], rock.perm_v.v[j]), -grid.dz});
        }
    return faces;
}

struct Mobility {
    std::vector<double> w, g, t;
};

Mobility cell_mobilities(const Field2D& sg, const FluidProps& fluids, const RelPermModel& rp) {
    Mobility m;
    const std::size_t n = sg.size();
    m.w.resize(n);
    m.g.resize(n);
    m.t.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [krw, krg] = corey_relperm(sg.v[i], rp);
        m.w[i] = krw / fluids.mu_w;
        m.g[i] = krg / fluids.mu_g;
        m.t[i] = m.w[i] + m.g[i];
    }
    return m;
}

// Injection allocation: the scheduled surface rate is split across the
// perforated cells in proportion to perm * total mobility, so high-perm,
// mobile intervals take the larger share.  Falls back to an even split if
// every perforation is immobile.
std::vector<double> injector_allocation(const WellSpec& w, const RockFields& rock,
                                        const Mobility& mob) {
    std::vector<double> weights(w.cells.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < w.cells.size(); ++k) {
        const std::size_t c = w.cells[k];
        weights[k] = rock.perm_h.v[c] * mob.t[c];
        sum += weights[k];
    }
    if (sum <= 0.0) {
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(weights.size()));
        return weights;
    }
    for (double& wgt : weights) wgt /= sum;
    return weights;
}

double producer_cell_bhp(const WellSpec& w, const Grid& grid, std::size_t cell,
                         const FluidProps& fluids) {
    const std::size_t iz = cell / grid.nx;
    return w.bhp + fluids.rho_w * fluids.g * (grid.cell_depth(iz) - w.bhp_datum_depth);
}

void validate_case_pieces(const Grid& grid, const RockFields& rock, const FluidProps& fluids,
                          const RelPermModel& rp, const std::vector<WellSpec>& wells) {
    grid.validate();
    rock.validate(grid);
    fluids.validate();
    rp.validate();
    for (const WellSpec& w : wells) w.validate(grid);
}

// Jacobi-preconditioned conjugate gradients on the structured stencil.
// Convergence is judged on the diagonally scaled residual sqrt(r.z), which
// keeps stiff well rows (well index orders of magnitude above the face
// transmissibilities) from drowning out the interior equations.  Starts
// from the previous pressure so an already-converged state (no forcing)
// returns bitwise unchanged.
Field2D solve_cg(const Grid& grid, const std::vector<Face>& faces,
                 const std::vector<double>& face_coef, const std::vector<double>& diag,
                 const std::vector<double>& rhs, const Field2D& p_start) {
    const std::size_t n = grid.n_cells();
    for (std::size_t i = 0; i < n; ++i)
        if (!(diag[i] > 0.0))
            throw NumericError("pressure system has a zero pivot (isolated immobile cell)");

    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < n; ++i) y[i] = diag[i] * x[i];
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const double c = face_coef[f];
            y[faces[f].i] -= c * x[faces[f].j];
            y[faces[f].j] -= c * x[faces[f].i];
        }
    };
    auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
        return acc;
    };

    double b_scaled = 0.0;
    for (std::size_t i = 0; i < n; ++i) b_scaled += rhs[i] * rhs[i] / diag[i];
    const double tol2 = 1e-20 * std::max(b_scaled, 1e-300);

    std::vector<double> x(p_start.v), r(n), z(n), d(n), q(n);
    apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    double rho = dot(r, z);  // rho == ||r||^2 in the scaled norm

    Field2D out(grid.nx, grid.nz);
    if (rho <= tol2) {
        out.v = std::move(x);
        return out;
    }

    d = z;
    const std::size_t max_iter = 10 * n;
    for (std::size_t it = 0; it < max_iter; ++it) {
        apply(d, q);
        const double alpha = rho / dot(d, q);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * d[i];
            r[i] -= alpha * q[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        const double rho_new = dot(r, z);
        if (rho_new <= tol2) {
            out.v = std::move(x);
            return out;
        }
        const double beta = rho_new / rho;
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) d[i] = z[i] + beta * d[i];
    }
    throw NumericError("pressure solve did not converge within 10n iterations");
}

}  // namespace

Field2D pressure_solve(const SimState& state, const Grid& grid, const RockFields& rock,
                       const FluidProps& fluids, const RelPermModel& relperm,
                       const std::vector<WellSpec>& wells, double dt_s) {
    validate_case_pieces(grid, rock, fluids, relperm, wells);
    if (!(dt_s > 0.0)) throw ConfigError("pressure solve: time step must be positive");
    const std::size_t n = grid.n_cells();
    if (state.p.size() != n || state.sg.size() != n)
        throw ContractError("pressure solve: state does not match the grid");

    const Mobility mob = cell_mobilities(state.sg, fluids, relperm);
    const std::vector<Face> faces = build_faces(grid, rock);
    const double vc = grid.cell_volume();

    std::vector<double> diag(n, 0.0), rhs(n, 0.0);
    bool any_storage = false, any_producer = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double sg = state.sg.v[i];
        const double c_t = fluids.c_r + (1.0 - sg) * fluids.c_w + sg * fluids.c_g;
        const double storage = vc * rock.poro.v[i] * c_t / dt_s;
        if (storage > 0.0) any_storage = true;
        diag[i] = storage;
        rhs[i] = storage * state.p.v[i];
    }
    for (const WellSpec& w : wells)
        if (w.kind == WellKind::producer) any_producer = true;
    if (!any_storage && !any_producer)
        throw ConfigError(
            "pressure system is singular: incompressible with no pressure-controlled well");

    // Phase-potential upwinding from the current state; the total-mobility
    // face coefficient then feeds the implicit matrix, and the per-phase
    // gravity parts go to the right-hand side.
    std::vector<double> face_coef(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& fc = faces[f];
        const double dp = state.p.v[fc.i] - state.p.v[fc.j];
        const double grav_w = fluids.rho_w * fluids.g * fc.dz_drop;
        const double grav_g = fluids.rho_g * fluids.g * fc.dz_drop;
        const double lw = (dp - grav_w >= 0.0) ? mob.w[fc.i] : mob.w[fc.j];
        const double lg = (dp - grav_g >= 0.0) ? mob.g[fc.i] : mob.g[fc.j];
        face_coef[f] = fc.trans * (lw + lg);
        diag[fc.i] += face_coef[f];
        diag[fc.j] += face_coef[f];
        const double grav_rhs = fc.trans * (lw * grav_w + lg * grav_g);
        rhs[fc.i] += grav_rhs;
        rhs[fc.j] -= grav_rhs;
    }

    for (const WellSpec& w : wells) {
        if (w.kind == WellKind::injector) {
            const std::vector<double> weights = injector_allocation(w, rock, mob);
            const double q = w.rate_during(state.t_months);
            for (std::size_t k = 0; k < w.cells.size(); ++k) rhs[w.cells[k]] += q * weights[k];
        } else {
            for (std::size_t k = 0; k < w.cells.size(); ++k) {
                const std::size_t c = w.cells[k];
                const double coef = w.well_index[k] * mob.t[c];
                diag[c] += coef;
                rhs[c] += coef * producer_cell_bhp(w, grid, c, fluids);
            }
        }
    }

    Field2D p_new = solve_cg(grid, faces, face_coef, diag, rhs, state.p);
    for (double v : p_new.v)
        if (!std::isfinite(v)) throw NumericError("pressure solve produced a non-finite value");
    return p_new;
}

Field2D saturation_update(const SimState& state, const Field2D& p_new, const Grid& grid,
                          const RockFields& rock, const FluidProps& fluids,
                          const RelPermModel& relperm, const std::vector<WellSpec>& wells,
                          double dt_s, TransportReport* report) {
    validate_case_pieces(grid, rock, fluids, relperm, wells);
    if (!(dt_s > 0.0)) throw ConfigError("transport: time step must be positive");
    const std::size_t n = grid.n_cells();
    if (state.sg.size() != n || p_new.size() != n)
        throw ContractError("transport: fields do not match the grid");

    const std::vector<Face> faces = build_faces(grid, rock);
    const double vc = grid.cell_volume();
    std::vector<double> pore_vol(n);
    for (std::size_t i = 0; i < n; ++i) pore_vol[i] = vc * rock.poro.v[i];

    // Total face fluxes reconstructed exactly as the implicit solve balanced
    // them: month-start upwind mobilities against the fresh pressure.  They
    // stay frozen for the whole month; the sub-steps re-split them between
    // the phases with refreshed fractional flow.  (Refreshing the gas
    // mobility against a frozen pressure *drop* instead overshoots badly at
    // a displacement front, where the drop was computed for all-water
    // mobility.)
    struct FaceFlow {
        double total;    // frozen total Darcy flux i -> j (m^3/s)
        double seg_coef; // trans * |dz| * (rho_w - rho_g) * g, vertical faces
    };
    const Mobility mob_start = cell_mobilities(state.sg, fluids, relperm);
    std::vector<FaceFlow> flow(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& fc = faces[f];
        const double dp0 = state.p.v[fc.i] - state.p.v[fc.j];
        const double grav_w = fluids.rho_w * fluids.g * fc.dz_drop;
        const double grav_g = fluids.rho_g * fluids.g * fc.dz_drop;
        const double lw0 = (dp0 - grav_w >= 0.0) ? mob_start.w[fc.i] : mob_start.w[fc.j];
        const double lg0 = (dp0 - grav_g >= 0.0) ? mob_start.g[fc.i] : mob_start.g[fc.j];
        const double dp = p_new.v[fc.i] - p_new.v[fc.j];
        flow[f].total = fc.trans * (lw0 * (dp - grav_w) + lg0 * (dp - grav_g));
        flow[f].seg_coef = fc.trans * (-fc.dz_drop) * (fluids.rho_w - fluids.rho_g) * fluids.g;
    }

    // Injection split and producer drawdown are also fixed for the month so
    // the volumes booked here match the sources the pressure solve used.
    std::vector<double> inj_rate(n, 0.0);
    for (const WellSpec& w : wells) {
        if (w.kind != WellKind::injector) continue;
        const std::vector<double> weights = injector_allocation(w, rock, mob_start);
        const double q = w.rate_during(state.t_months);
        for (std::size_t k = 0; k < w.cells.size(); ++k) inj_rate[w.cells[k]] += q * weights[k];
    }
    struct Sink {
        std::size_t cell;
        double coef;      // WI (mobility applied per sub-step)
        double drawdown;  // p_new - depth-corrected bhp, frozen
    };
    std::vector<Sink> sinks;
    for (const WellSpec& w : wells) {
        if (w.kind != WellKind::producer) continue;
        for (std::size_t k = 0; k < w.cells.size(); ++k) {
            const std::size_t c = w.cells[k];
            sinks.push_back(
                {c, w.well_index[k], p_new.v[c] - producer_cell_bhp(w, grid, c, fluids)});
        }
    }

    // Wave-speed bounds for the explicit sub-steps, sampled from the actual
    // curves: the viscous wave moves at |F_t| * max|df_g/dS| and the
    // counter-current segregation wave at seg_coef * max|d(lam_g*lam_w/
    // lam_t)/dS|; producer sinks respond at WI * |drawdown| * max|dlam_g/dS|.
    double fw_slope = 0.0, seg_slope = 0.0, lam_g_slope = 0.0;
    {
        const int samples = 4000;
        const double s_hi = 1.0 - relperm.swc;
        double prev_f = 0.0, prev_seg = 0.0, prev_lg = 0.0;
        for (int k = 0; k <= samples; ++k) {
            const double s = s_hi * k / samples;
            const auto [krw, krg] = corey_relperm(s, relperm);
            const double lw = krw / fluids.mu_w, lg = krg / fluids.mu_g;
            const double f = lg / (lw + lg);
            const double seg = lg * lw / (lw + lg);
            if (k > 0) {
                const double inv_ds = samples / s_hi;
                fw_slope = std::max(fw_slope, std::abs(f - prev_f) * inv_ds);
                seg_slope = std::max(seg_slope, std::abs(seg - prev_seg) * inv_ds);
                lam_g_slope = std::max(lam_g_slope, std::abs(lg - prev_lg) * inv_ds);
            }
            prev_f = f;
            prev_seg = seg;
            prev_lg = lg;
        }
    }
    std::vector<double> speed_sum(n, 0.0);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const double s = std::abs(flow[f].total) * fw_slope + flow[f].seg_coef * seg_slope;
        speed_sum[faces[f].i] += s;
        speed_sum[faces[f].j] += s;
    }
    for (const Sink& s : sinks) speed_sum[s.cell] += s.coef * std::abs(s.drawdown) * lam_g_slope;
    double dt_max = dt_s;
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = speed_sum[i] + inj_rate[i];
        if (denom > 0.0) dt_max = std::min(dt_max, 0.5 * pore_vol[i] / denom);
    }
    const auto n_sub = static_cast<std::size_t>(std::ceil(dt_s / dt_max - 1e-12));
    const double dt_sub = dt_s / static_cast<double>(std::max<std::size_t>(n_sub, 1));

    Field2D sg = state.sg;
    const double sg_max = 1.0 - relperm.swc;
    const double total_inj_rate = std::accumulate(inj_rate.begin(), inj_rate.end(), 0.0);
    double injected = 0.0, produced = 0.0, clamped = 0.0;
    std::vector<double> face_flux(faces.size());
    std::vector<double> take(sinks.size());
    std::vector<double> inflow(n), outflow(n), theta(n), net(n);
    for (std::size_t sub = 0; sub < std::max<std::size_t>(n_sub, 1); ++sub) {
        const Mobility mob = cell_mobilities(sg, fluids, relperm);
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const std::size_t i = faces[f].i, j = faces[f].j;
            // Viscous part: donor-cell fractional flow of the frozen total
            // flux.  Segregation part: gas rises (j is the deeper cell), so
            // gas mobility comes from below and water mobility from above.
            const std::size_t don = flow[f].total >= 0.0 ? i : j;
            const double fg = mob.g[don] / mob.t[don];
            double seg = 0.0;
            if (flow[f].seg_coef > 0.0) {
                const double lg_dn = mob.g[j], lw_up = mob.w[i];
                const double lt = lg_dn + lw_up;
                if (lt > 0.0) seg = flow[f].seg_coef * lg_dn * lw_up / lt;
            }
            face_flux[f] = fg * flow[f].total - seg;  // gas volume rate i -> j
        }
        for (std::size_t k = 0; k < sinks.size(); ++k)
            take[k] = sinks[k].coef * mob.g[sinks[k].cell] * sinks[k].drawdown;

        // Receiver-capacity limiter: the monthly pressure field keeps pushing
        // gas into a cell even after it reaches 1 - swc (the rebalancing that
        // would stop it only happens at the next implicit solve), so scale
        // back the inflows a cell cannot hold.  Scaled fluxes stay
        // antisymmetric per face, which keeps the volume books exact;
        // repeated passes let a backed-up column propagate the restriction
        // downward (fluxes only ever shrink, so the sweep converges).
        for (int pass = 0; pass < 8; ++pass) {
            std::fill(inflow.begin(), inflow.end(), 0.0);
            std::fill(outflow.begin(), outflow.end(), 0.0);
            for (std::size_t f = 0; f < faces.size(); ++f) {
                const double fg = face_flux[f];
                if (fg >= 0.0) {
                    outflow[faces[f].i] += fg;
                    inflow[faces[f].j] += fg;
                } else {
                    inflow[faces[f].i] -= fg;
                    outflow[faces[f].j] -= fg;
                }
            }
            for (std::size_t i = 0; i < n; ++i) inflow[i] += inj_rate[i];
            for (std::size_t k = 0; k < sinks.size(); ++k)
                if (take[k] >= 0.0)
                    outflow[sinks[k].cell] += take[k];
                else
                    inflow[sinks[k].cell] -= take[k];
            bool limited = false;
            for (std::size_t i = 0; i < n; ++i) {
                theta[i] = 1.0;
                if (inflow[i] <= 0.0) continue;
                const double room_rate = (sg_max - sg.v[i]) * pore_vol[i] / dt_sub + outflow[i];
                if (inflow[i] > room_rate) {
                    theta[i] = std::max(room_rate, 0.0) / inflow[i];
                    limited = true;
                }
            }
            if (!limited) break;
            for (std::size_t f = 0; f < faces.size(); ++f) {
                const std::size_t recv = face_flux[f] >= 0.0 ? faces[f].j : faces[f].i;
                face_flux[f] *= theta[recv];
            }
        }

        std::fill(net.begin(), net.end(), 0.0);
        for (std::size_t f = 0; f < faces.size(); ++f) {
            net[faces[f].i] -= face_flux[f];
            net[faces[f].j] += face_flux[f];
        }
        for (std::size_t i = 0; i < n; ++i) net[i] += inj_rate[i];
        injected += total_inj_rate * dt_sub;
        for (std::size_t k = 0; k < sinks.size(); ++k) {
            net[sinks[k].cell] -= take[k];
            produced += take[k] * dt_sub;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s_new = sg.v[i] + dt_sub * net[i] / pore_vol[i];
            if (s_new < 0.0) {
                clamped += -s_new * pore_vol[i];
                s_new = 0.0;
            } else if (s_new > sg_max) {
                clamped += (s_new - sg_max) * pore_vol[i];
                s_new = sg_max;
            }
            sg.v[i] = s_new;
        }
    }

    for (double v : sg.v)
        if (!std::isfinite(v)) throw NumericError("transport produced a non-finite saturation");
    if (report) {
        report->injected_m3 = injected;
        report->produced_m3 = produced;
        report->clamped_m3 = clamped;
        report->n_substeps = static_cast<int>(std::max<std::size_t>(n_sub, 1));
    }
    return sg;
}

SimResult simulate(const SimCase& c) {
    const auto wall_start = std::chrono::steady_clock::now();
    validate_case_pieces(c.grid, c.rock, c.fluids, c.relperm, c.wells);
    c.schedule.validate();
    if (!(c.p_datum > 0.0)) throw ConfigError("case: datum pressure must be positive");

    SimResult result;
    result.case_id = c.id;
    const std::size_t n_snap = c.schedule.n_snapshots();
    result.snapshots.reserve(n_snap);
    result.injected_volume_series.reserve(n_snap);
    result.produced_volume_series.reserve(n_snap);
    result.balance_error_series.reserve(n_snap);

    SimState state = hydrostatic_init(c.grid, c.fluids, c.p_datum);
    const std::vector<WellSpec> no_wells;
    double cum_inj = 0.0, cum_prod = 0.0, cum_clamped = 0.0;

    for (int month = 1; month <= c.schedule.t_total; ++month) {
        const bool injecting = month <= c.schedule.t_inj;
        const std::vector<WellSpec>& active = injecting ? c.wells : no_wells;
        const double dt = kSecondsPerMonth;
        try {
            Field2D p_new =
                pressure_solve(state, c.grid, c.rock, c.fluids, c.relperm, active, dt);
            TransportReport rep;
            Field2D sg_new = saturation_update(state, p_new, c.grid, c.rock, c.fluids, c.relperm,
                                              active, dt, &rep);
            cum_inj += rep.injected_m3;
            cum_prod += rep.produced_m3;
            cum_clamped += rep.clamped_m3;
            state.p = std::move(p_new);
            state.sg = std::move(sg_new);
            state.t_months = month;
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (month " + std::to_string(month) + ")");
        }

        for (std::size_t i = 0; i < state.sg.size(); ++i) {
            const double sg = state.sg.v[i];
            if (sg < -1e-12 || sg > 1.0 - c.relperm.swc + 1e-12 || !(state.p.v[i] > 0.0))
                throw NumericError("state left its physical bounds (month " +
                                   std::to_string(month) + ")");
        }

        if (month % c.schedule.snapshot_every == 0) {
            const double in_place = co2_in_place(c.grid, c.rock, state.sg);
            const double err =
                std::abs(in_place - (cum_inj - cum_prod)) / std::max(cum_inj, 1e-12);
            if (!(err < 1e-6))
                throw NumericError("volume balance failed at month " + std::to_string(month) +
                                   " (relative error " + std::to_string(err) + ")");
            result.snapshots.push_back(state);
            result.injected_volume_series.push_back(cum_inj);
            result.produced_volume_series.push_back(cum_prod);
            result.balance_error_series.push_back(err);
        }
    }
    result.clamped_m3 = cum_clamped;
    result.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
}

}  // namespace gcsfno
