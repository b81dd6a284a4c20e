#include "gcsfno/checkpoint.hpp"

#include <cstdio>
#include <stdexcept>

#include "gcsfno/binio.hpp"

namespace gcsfno {

namespace {
constexpr char kMagic[] = "FNOC1\n";
constexpr std::size_t kMagicLen = 6;
}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
}

void checkpoint_save(const std::string& path, const Checkpoint& cp) {
    const FnoArch& arch = cp.params.arch;
    arch.validate();
    if (cp.meta.scenario_id < 1 || cp.meta.scenario_id > 5)
        throw ConfigError("checkpoint: scenario_id must be 1..5");
    if (cp.meta.target_code > 1) throw ConfigError("checkpoint: unknown target code");

    std::string kv_block;
    for (const auto& [k, v] : cp.meta.kv) {
        if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
            v.find('\n') != std::string::npos)
            throw ConfigError("checkpoint: key/value may not contain '=' in key or newlines");
        kv_block += k;
        kv_block += '=';
        kv_block += v;
        kv_block += '\n';
    }

    binio::Writer w(path);
    w.magic(kMagic, kMagicLen);
    w.u32(kCheckpointVersion);
    w.u32(cp.meta.scenario_id);
    w.u32(cp.meta.target_code);
    w.u32(static_cast<std::uint32_t>(arch.width));
    w.u32(static_cast<std::uint32_t>(arch.modes_x));
    w.u32(static_cast<std::uint32_t>(arch.modes_z));
    w.u32(static_cast<std::uint32_t>(arch.fc2_width));
    w.u32(cp.meta.nx);
    w.u32(cp.meta.nz);
    w.f64(cp.meta.t_inj_months);
    for (const auto* t : cp.params.tensors()) w.f32_array(t->data.data(), t->size());
    w.u32(static_cast<std::uint32_t>(kv_block.size()));
    w.bytes(kv_block.data(), kv_block.size());
    w.close();
}

Checkpoint checkpoint_load(const std::string& path) {
    binio::Reader r(path);
    r.magic(kMagic, kMagicLen);
    const std::size_t version_at = r.pos();
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")",
                          version_at);

    Checkpoint cp;
    cp.meta.scenario_id = r.u32();
    cp.meta.target_code = r.u32();
    FnoArch arch;
    arch.width = r.u32();
    arch.modes_x = r.u32();
    arch.modes_z = r.u32();
    arch.fc2_width = r.u32();
    cp.meta.nx = r.u32();
    cp.meta.nz = r.u32();
    cp.meta.t_inj_months = r.f64();
    if (cp.meta.scenario_id < 1 || cp.meta.scenario_id > 5)
        throw FormatError(path + ": scenario_id out of range", kMagicLen + 4);
    if (cp.meta.target_code > 1) throw FormatError(path + ": unknown target code", kMagicLen + 8);
    try {
        arch.validate();
    } catch (const ConfigError& e) {
        throw FormatError(path + ": invalid architecture header: " + e.what(), kMagicLen + 12);
    }

    cp.params = fno_zeros<float>(arch);
    for (auto* t : cp.params.tensors()) {
        const std::size_t at = r.pos();
        r.f32_array(t->data.data(), t->size());
        if (!t->all_finite()) throw FormatError(path + ": non-finite parameter data", at);
    }

    const std::uint32_t kv_len = r.u32();
    std::string kv_block(kv_len, '\0');
    const std::size_t kv_at = r.pos();
    if (kv_len > 0) r.bytes(kv_block.data(), kv_len);
    std::size_t line_start = 0;
    while (line_start < kv_block.size()) {
        const std::size_t nl = kv_block.find('\n', line_start);
        if (nl == std::string::npos)
            throw FormatError(path + ": unterminated key=value line", kv_at + line_start);
        const std::string line = kv_block.substr(line_start, nl - line_start);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(path + ": key=value line without '='", kv_at + line_start);
        cp.meta.kv[line.substr(0, eq)] = line.substr(eq + 1);
        line_start = nl + 1;
    }
    r.require_end();
    return cp;
}

}  // namespace gcsfno
