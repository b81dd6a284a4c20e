#include <fstream>
#include <sstream>

#include "gcsfno/archive.hpp"
#include "gcsfno/binio.hpp"
#include "gcsfno/checkpoint.hpp"

namespace gcsfno {

namespace {

constexpr char kMagic[] = "GCSR1\n";

std::string join_series(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace

std::string sidecar_path(const std::string& archive_path) { return archive_path + ".txt"; }

void archive_save(const std::string& path, const Grid& grid, const SimResult& result,
                  const std::map<std::string, std::string>& params) {
    const std::size_t n = grid.n_cells();
    for (const SimState& s : result.snapshots)
        if (s.p.size() != n || s.sg.size() != n)
            throw ConfigError("archive: snapshot does not match the grid");

    binio::Writer w(path);
    w.magic(kMagic, 6);
    w.u32(kArchiveVersion);
    w.u32(static_cast<std::uint32_t>(grid.nx));
    w.u32(static_cast<std::uint32_t>(grid.nz));
    w.u32(static_cast<std::uint32_t>(result.snapshots.size()));
    std::vector<float> buf(n);
    for (const SimState& s : result.snapshots) {
        w.f64(s.t_months);
        for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(s.p.v[i]);
        w.f32_array(buf.data(), n);
        for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(s.sg.v[i]);
        w.f32_array(buf.data(), n);
    }
    w.close();

    std::map<std::string, std::string> kv = params;
    kv["case_id"] = result.case_id;
    kv["clamped_m3"] = format_double(result.clamped_m3);
    kv["injected_m3_series"] = join_series(result.injected_volume_series);
    kv["produced_m3_series"] = join_series(result.produced_volume_series);
    kv["balance_error_series"] = join_series(result.balance_error_series);
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    if (!side) throw ConfigError("cannot open sidecar for writing: " + sidecar_path(path));
    for (const auto& [key, value] : kv) {
        if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
            value.find('\n') != std::string::npos)
            throw ConfigError("sidecar entries must be single-line key=value pairs");
        side << key << '=' << value << '\n';
    }
    side.close();
    if (!side) throw ConfigError("failed writing sidecar: " + sidecar_path(path));
}

Archive archive_load(const std::string& path) {
    binio::Reader r(path);
    r.magic(kMagic, 6);
    const std::uint32_t version = r.u32();
    if (version != kArchiveVersion)
        throw FormatError("unsupported archive version " + std::to_string(version), 6);
    Archive a;
    a.nx = r.u32();
    a.nz = r.u32();
    const std::uint32_t n_snapshots = r.u32();
    if (a.nx < 1 || a.nz < 1) throw FormatError("archive grid dimensions must be positive", 10);
    const std::size_t n = static_cast<std::size_t>(a.nx) * a.nz;
    a.snapshots.resize(n_snapshots);
    std::vector<float> buf(n);
    for (SimState& s : a.snapshots) {
        s.t_months = r.f64();
        s.p = Field2D(a.nx, a.nz);
        r.f32_array(buf.data(), n);
        for (std::size_t i = 0; i < n; ++i) s.p.v[i] = buf[i];
        s.sg = Field2D(a.nx, a.nz);
        r.f32_array(buf.data(), n);
        for (std::size_t i = 0; i < n; ++i) s.sg.v[i] = buf[i];
    }
    r.require_end();

    std::ifstream side(sidecar_path(path));
    if (side) {
        std::string line;
        while (std::getline(side, line)) {
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw FormatError("sidecar line without '=': " + line, 0);
            a.sidecar[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    return a;
}

}  // namespace gcsfno
