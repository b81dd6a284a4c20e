#ifndef GCSFNO_FIELD_HPP
#define GCSFNO_FIELD_HPP

#include <cstddef>
#include <vector>

#include "gcsfno/errors.hpp"

namespace gcsfno {

/// Scalar field on a structured nx x nz grid, stored row-major with x
/// fastest (the snapshot archive layout).
struct Field2D {
    std::size_t nx = 0;
    std::size_t nz = 0;
    std::vector<double> v;

    Field2D() = default;
    Field2D(std::size_t nx_, std::size_t nz_, double fill = 0.0)
        : nx(nx_), nz(nz_), v(nx_ * nz_, fill) {}

    std::size_t size() const { return v.size(); }
    std::size_t idx(std::size_t ix, std::size_t iz) const { return iz * nx + ix; }
    double& at(std::size_t ix, std::size_t iz) { return v[idx(ix, iz)]; }
    double at(std::size_t ix, std::size_t iz) const { return v[idx(ix, iz)]; }
};

/// Structured 2D vertical cross-section grid. The vertical index iz
/// increases downward; depth Z is positive downward.
struct Grid {
    std::size_t nx = 64;
    std::size_t nz = 32;
    double dx = 25.0;   // m
    double dz = 2.0;    // m
    double z_top = 1968.0;  // depth of the top face of row 0 (m)
    double dy = 1.0;    // cross-section thickness (m), fixed

    std::size_t n_cells() const { return nx * nz; }
    std::size_t idx(std::size_t ix, std::size_t iz) const { return iz * nx + ix; }
    double cell_depth(std::size_t iz) const { return z_top + (static_cast<double>(iz) + 0.5) * dz; }
    double mid_depth() const { return z_top + 0.5 * static_cast<double>(nz) * dz; }
    double cell_volume() const { return dx * dz * dy; }

    void validate() const {
        if (nx < 4 || nz < 1) throw ConfigError("grid: need nx >= 4 and nz >= 1");
        if (dx <= 0.0 || dz <= 0.0) throw ConfigError("grid: dx and dz must be positive");
    }
};

}  // namespace gcsfno

#endif
