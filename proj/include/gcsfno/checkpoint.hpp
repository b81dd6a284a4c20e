#ifndef GCSFNO_CHECKPOINT_HPP
#define GCSFNO_CHECKPOINT_HPP

#include <cstdint>
#include <map>
#include <string>

#include "gcsfno/fno.hpp"

namespace gcsfno {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kTargetPressure = 0;
inline constexpr std::uint32_t kTargetSaturation = 1;

/// Everything besides the weights that a model file carries: which scenario
/// and quantity it was trained for, the training grid, the injection-period
/// length, and a free-form key=value block (normalizer statistics, seed,
/// training-history digest).
struct CheckpointMeta {
    std::uint32_t scenario_id = 1;  // 1..5
    std::uint32_t target_code = kTargetPressure;
    std::uint32_t nx = 0, nz = 0;
    double t_inj_months = 0.0;
    std::map<std::string, std::string> kv;
};

struct Checkpoint {
    CheckpointMeta meta;
    FnoParams<float> params;
};

/// Fixed little-endian layout: magic "FNOC1\n"; u32 {version, scenario_id,
/// target_code, width, modes_x, modes_z, fc2_width, nx, nz}; f64
/// t_inj_months; all parameter tensors as f32 in their fixed order (complex
/// weights interleaved re, im); u32 byte length plus UTF-8 "key=value"
/// lines.
void checkpoint_save(const std::string& path, const Checkpoint& cp);
Checkpoint checkpoint_load(const std::string& path);

/// Formats a double so that parsing it back reproduces the exact value.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace gcsfno

#endif
