#ifndef GCSFNO_CLI_HPP
#define GCSFNO_CLI_HPP

// Workflow orchestration: a flat key=value run configuration, deterministic
// enumeration of the sampled simulation cases, and the three commands that
// take a config from nothing to a full evaluation report (generate, train,
// evaluate).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gcsfno/sim.hpp"
#include "gcsfno/trainer.hpp"

namespace gcsfno {

/// Well placement shared by every case: injector columns perforated over a
/// common row range, producer columns perforated over the full height and
/// held at a constant bottom-hole pressure (datum at the grid mid depth).
struct WellLayout {
    std::vector<std::size_t> injector_ix{16, 32, 48};
    std::size_t injector_row0 = 20;
    std::size_t injector_row1 = 31;  // inclusive
    std::vector<std::size_t> producer_ix{4, 59};
    double producer_bhp = 1.95e7;  // Pa
};

/// Geostatistical permeability generator inputs and the porosity transform
/// phi = poro_a + poro_b * log10(K / poro_k_ref), clamped to
/// [poro_min, poro_max]. Vertical permeability is kv_ratio times horizontal.
struct RockConfig {
    double corr_len_x = 150.0;  // m
    double corr_len_z = 10.0;   // m
    double log10_mean = -13.0;  // log10 of K in m^2
    double log10_std = 0.4;
    double kv_ratio = 0.1;
    double poro_a = 0.2;
    double poro_b = 0.05;
    double poro_k_ref = 1e-13;  // m^2
    double poro_min = 0.05;
    double poro_max = 0.35;
};

/// The sampled factor grid: permeability realizations x total injected
/// volumes x per-injector rate splits. Splits are non-negative weights,
/// normalized to fractions of the case volume; a zero weight leaves that
/// injector out of the case entirely. When case_budget exceeds the plain
/// factor product, the enumeration wraps around in replication tiers whose
/// permeability seeds are offset by replicate_seed_stride per tier, so every
/// case is still a distinct realization.
struct SampleGrid {
    std::vector<std::uint64_t> perm_seeds{101, 202, 303};
    std::vector<double> volumes_m3{2400.0, 1200.0, 600.0};
    std::vector<std::vector<double>> splits{
        {50, 50, 0}, {10, 90, 0}, {90, 10, 0}, {50, 0, 50}, {10, 0, 90},
        {90, 0, 10}, {0, 50, 50}, {0, 10, 90}, {0, 90, 10}, {1, 1, 1}};
    std::size_t case_budget = 90;
    std::uint64_t replicate_seed_stride = 1000;

    std::size_t product() const {
        return perm_seeds.size() * volumes_m3.size() * splits.size();
    }
};

/// Everything one run needs, parsed from a flat key=value file with
/// section-prefixed keys (e.g. grid.nx=64, sample.volumes_m3=2400,1200,600).
/// Unknown and duplicate keys are errors; the member initializers here are
/// the documented defaults.
struct RunConfig {
    Grid grid;
    FluidProps fluids;
    RelPermModel relperm;
    double p_datum = 2.0e7;  // Pa at mid depth (hydrostatic init)
    RockConfig rock;
    WellLayout wells;
    Schedule schedule{360, 960, 1};
    SampleGrid sample;
    std::uint64_t split_seed = 7;
    FnoArch arch{5, 1, 8, 4, 8, 8, 64, true};
    TrainConfig train{20, 20, 0.001, 0, 1};
    std::uint64_t init_seed = 1;
    std::string out = "out";

    /// ConfigError with the offending key in the message.
    void validate() const;

    /// ConfigError on unknown keys, duplicates, or unparseable values.
    static RunConfig parse_text(const std::string& text);
    /// ConfigError when the file cannot be read.
    static RunConfig parse_file(const std::string& path);
};

/// One enumerated case: its slot in each factor list plus the replication
/// tier and the tier-offset permeability seed.
struct CaseSpec {
    std::size_t index = 0;
    std::string id;  // case_0000 .. case_NNNN in enumeration order
    std::size_t seed_slot = 0;
    std::size_t volume_slot = 0;
    std::size_t split_slot = 0;
    std::size_t tier = 0;
    std::uint64_t perm_seed = 0;
};

/// The case_budget-long enumeration: seed-major, then volume, then split,
/// wrapping into replication tiers once the factor product is exhausted.
std::vector<CaseSpec> enumerate_cases(const RunConfig& cfg);

/// Canonical parameter block describing everything that determines one
/// case's simulation; written to the archive sidecar and hashed for the
/// idempotence check.
std::map<std::string, std::string> case_params(const RunConfig& cfg, const CaseSpec& spec);

/// 16-hex-digit FNV-1a hash of the canonical parameter block.
std::string case_digest(const std::map<std::string, std::string>& params);

/// Realizes the case: generated rock fields, active injectors (zero-weight
/// ones omitted) with constant rates volume*fraction/t_inj, full-column
/// producers with Peaceman well indices. tags carries the slot bookkeeping
/// and the config digest.
SimCase build_case(const RunConfig& cfg, const CaseSpec& spec);

/// Output locations under the config's out directory.
struct OutPaths {
    std::string archives, datasets, models, reports;
    static OutPaths under(const std::string& out);
};
std::string archive_file(const RunConfig& cfg, const std::string& case_id);
std::string dataset_file(const RunConfig& cfg, int scenario_id, std::uint32_t target_code);
std::string checkpoint_file(const RunConfig& cfg, int scenario_id, std::uint32_t target_code);
std::string history_file(const RunConfig& cfg, int scenario_id, std::uint32_t target_code);

/// "pressure" or "saturation" to the target code; ConfigError otherwise.
std::uint32_t parse_target(const std::string& name);

struct GenerateStats {
    std::size_t total = 0;
    std::size_t simulated = 0;
    std::size_t skipped = 0;  // archive already current for its digest
};

/// Simulates every enumerated case into out/archives, skipping cases whose
/// archive sidecar already carries the current config digest. jobs > 1 runs
/// cases concurrently; outputs are identical either way. NumericError (with
/// the case id prepended) on simulation failure.
GenerateStats cmd_generate(const RunConfig& cfg, int jobs = 1);

struct TrainOutcome {
    std::string dataset_path, checkpoint_path, history_path;
    bool dataset_built = false;  // false: reused an existing dataset file
    int best_epoch = 0;
    double best_val_rmse_phys = 0.0;
};

/// Builds (or reuses) the scenario/target dataset from the archives, trains
/// the surrogate, and writes the checkpoint and history CSV. Deterministic
/// per config; the parameter-init seed is
/// init_seed + 100 * scenario_id + 10 * target_code so every model draws a
/// distinct stream. ConfigError for bad scenario/target or stale archives.
TrainOutcome cmd_train(const RunConfig& cfg, int scenario_id, const std::string& target);

/// Writes the full report set under out/reports from whatever checkpoints
/// exist, flagging missing ones on stderr. Returns 0 when at least one
/// model was evaluated, 2 when nothing was evaluable.
int cmd_evaluate(const RunConfig& cfg);

}  // namespace gcsfno

#endif
