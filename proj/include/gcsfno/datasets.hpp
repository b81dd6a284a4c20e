#ifndef GCSFNO_DATASETS_HPP
#define GCSFNO_DATASETS_HPP

// Turns simulation results into normalized feature/target samples for the
// surrogate models: five training scenarios (which period they cover and
// whether the rate feature is the current rate or the cumulative volume),
// the reduced time-step selection for training, the case-level
// train/validation/test split, min-max normalization statistics, and the
// dataset file format.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gcsfno/checkpoint.hpp"
#include "gcsfno/sim.hpp"
#include "gcsfno/tensor.hpp"

namespace gcsfno {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kNumFeatureChannels = 5;

// Feature-image channel order.
inline constexpr std::size_t kChanPermH = 0;        // horizontal permeability (m^2)
inline constexpr std::size_t kChanPoro = 1;         // porosity
inline constexpr std::size_t kChanProducerLoc = 2;  // 1 at producer-perforated cells
inline constexpr std::size_t kChanRate = 3;         // rate feature at injector cells
inline constexpr std::size_t kChanTime = 4;         // t / t_total, spatially constant

enum class Period { injection, post_injection, both };
enum class RateFeature { current_rate, cumulative_volume };

/// One of the five model scenarios: the period its samples come from and
/// which rate feature the fourth channel carries.
struct Scenario {
    int id = 1;
    Period period = Period::injection;
    RateFeature rate_feature = RateFeature::current_rate;

    /// The five supported rows, in id order.
    static const std::array<Scenario, 5>& table();
    /// ConfigError outside 1..5.
    static Scenario by_id(int id);

    /// Whether a snapshot month belongs to this scenario's period. The
    /// boundary month t == t_inj counts as injection (wells are open
    /// through the end of that month).
    bool accepts_month(double t_months, double t_inj_months) const;
};

/// One training pair: features [5, nx, nz] and target [1, nx, nz], in
/// physical units (normalization is applied downstream).
struct Sample {
    TensorF x;
    TensorF y;
    std::string case_id;
    double t_months = 0.0;
};

/// Per-channel and per-target min/max fitted on training samples only.
/// Channels with zero range map to all-zeros; invert restores the constant.
struct Normalizer {
    std::array<double, kNumFeatureChannels> x_min{};
    std::array<double, kNumFeatureChannels> x_max{};
    double y_min = 0.0;
    double y_max = 0.0;

    void apply_x(TensorF& x) const;
    void invert_x(TensorF& x) const;
    void apply_y(TensorF& y) const;
    void invert_y(TensorF& y) const;

    std::map<std::string, std::string> to_kv() const;
    /// FormatError when a statistic is missing or unparseable.
    static Normalizer from_kv(const std::map<std::string, std::string>& kv);
};

/// A simulated case together with its result; the configuration supplies
/// the static channels (rock, wells, schedule), the result the snapshots.
struct CaseRecord {
    SimCase config;
    SimResult result;
};

struct AssemblyStats {
    std::size_t accepted = 0;
    std::size_t filtered = 0;  // snapshots outside the scenario period
};

struct Dataset {
    Scenario scenario;
    std::uint32_t target_code = kTargetPressure;
    // The shared schedule of the contributing cases; downstream models need
    // it to route injection vs post-injection months.
    double t_inj_months = 0.0;
    double t_total_months = 0.0;
    Normalizer normalizer;
    std::vector<Sample> train;
    std::vector<Sample> val;
    std::vector<Sample> test;
};

/// Reduced training cadence: the first injection year monthly, then
/// end-of-year months to the end of injection; the first post-injection
/// year monthly, then end-of-year months to the end of the run. Sorted and
/// deduplicated. ConfigError when t_inj is not a whole number of years.
std::vector<int> select_time_steps(int t_inj, int t_total);

/// Time integral of the injector's rate schedule up to min(t, t_inj), in
/// m^3; constant for t beyond the injection period. Producers contribute 0.
double cumulative_injection(const WellSpec& well, const Schedule& schedule, double t_months);

/// Builds one sample from one snapshot. The cross-section is the single
/// layer of the stack a 3D model would slice into; one sample per layer.
/// ContractError when the snapshot month lies outside the scenario period
/// (callers filter months first), ConfigError for an unknown target code.
Sample assemble_sample(const SimCase& c, const SimState& snapshot, const Scenario& scenario,
                       std::uint32_t target_code);

/// Min/max over the given training samples. ContractError when empty.
Normalizer fit_normalizer(const std::vector<Sample>& train);

/// Case-level 80/10/10 split (deterministic per split_seed), reduced
/// cadence for train/val, full monthly cadence for test, normalizer fitted
/// on train only. Samples stay in physical units. ContractError for fewer
/// than 10 cases, duplicate case ids, mismatched grids or schedules, or
/// results that do not cover the schedule at monthly cadence.
Dataset build_dataset(const std::vector<CaseRecord>& records, const Scenario& scenario,
                      std::uint32_t target_code, std::uint64_t split_seed,
                      AssemblyStats* stats = nullptr);

/// Streaming variant: cases are fetched one at a time through load_case
/// (called once per index, in order), so the full result set never has to
/// sit in memory at once. Split membership depends only on n_cases and
/// split_seed, never on the data.
Dataset build_dataset(std::size_t n_cases,
                      const std::function<CaseRecord(std::size_t)>& load_case,
                      const Scenario& scenario, std::uint32_t target_code,
                      std::uint64_t split_seed, AssemblyStats* stats = nullptr);

/// Fixed little-endian layout: magic "FNOD1\n"; u32 {version, n_samples,
/// n_channels, nx, nz, scenario_id, target_code}; per sample u32 case
/// number, f32 t_months, the feature image and the target image as f32.
/// The sidecar (path + ".txt") carries the normalizer statistics, the case
/// number -> case id map, and each case's split membership.
void dataset_save(const std::string& path, const Dataset& d);
Dataset dataset_load(const std::string& path);
std::string dataset_sidecar_path(const std::string& path);

}  // namespace gcsfno

#endif
