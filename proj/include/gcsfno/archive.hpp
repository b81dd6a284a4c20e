#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gcsfno/sim.hpp"

namespace gcsfno {

inline constexpr std::uint32_t kArchiveVersion = 1;

// On-disk snapshot archive for one simulated case.  Binary layout:
// magic "GCSR1\n", then little-endian u32 {version, nx, nz, n_snapshots},
// then per snapshot an f64 time in months followed by nx*nz f32 pressures
// (Pa) and nx*nz f32 gas saturations, row-major with x fastest.  A plain
// key=value text sidecar at <path>.txt carries the case parameters.
struct Archive {
    std::uint32_t nx = 0, nz = 0;
    std::vector<SimState> snapshots;
    std::map<std::string, std::string> sidecar;
};

// Writes the binary archive and its sidecar.  The caller supplies the case
// parameters for the sidecar; the cumulative volume series and the clamped
// volume from the result are appended to it.  Wall time is deliberately not
// recorded so identical runs produce identical files.
void archive_save(const std::string& path, const Grid& grid, const SimResult& result,
                  const std::map<std::string, std::string>& params);

Archive archive_load(const std::string& path);

std::string sidecar_path(const std::string& archive_path);

}  // namespace gcsfno
