#ifndef GCSFNO_EVALSUITE_HPP
#define GCSFNO_EVALSUITE_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gcsfno/checkpoint.hpp"
#include "gcsfno/datasets.hpp"
#include "gcsfno/sim.hpp"

namespace gcsfno {

/// Divisor turning a model-unit residual into the reporting unit:
/// pressure errors are reported in psia, saturation errors stay
/// dimensionless.
double report_unit_divisor(std::uint32_t target_code);

/// Physical-unit prediction with one model: normalize the features with the
/// statistics stored in the checkpoint, run the network, undo the target
/// normalization. The input grid must match the training grid.
TensorF model_predict(const Checkpoint& model, const TensorF& x);

/// Two-period predictor: one network serves months up to and including the
/// end of injection, a second one the months after it. The caller assembles
/// the feature tensor with the rate feature the selected model was trained
/// on.
struct CompositeModel {
    Checkpoint injection_model;
    Checkpoint post_model;
    double t_inj_months = 0.0;

    /// Both constituents must share the target quantity and grid, agree on
    /// the injection-period length, and each must cover its period.
    void validate() const;
};

/// Routes to the constituent owning the month (ties at the end of injection
/// go to the injection model) and returns its output unchanged.
TensorF composite_predict(const CompositeModel& cm, const TensorF& x, double t_months);

/// One point of a monthly metric series.
struct SeriesPoint {
    double t_months = 0.0;
    double value = 0.0;
    std::size_t pixels = 0;
};

/// Root-mean-square error pooled over every pixel of every sample, divided
/// by unit_divisor. Truth tensors come from the samples; predictions are
/// given in the same (physical) units, one per sample in the same order.
double pooled_rmse(const std::vector<Sample>& truths, const std::vector<TensorF>& preds,
                   double unit_divisor = 1.0);

/// Pooled RMSE restricted to each calendar month present in the sample set,
/// sorted by month.
std::vector<SeriesPoint> rmse_vs_time(const std::vector<Sample>& truths,
                                      const std::vector<TensorF>& preds,
                                      double unit_divisor = 1.0);

/// Pooled RMSE restricted to each depth row (constant z index), top row
/// first; one entry per row.
std::vector<double> rmse_per_row(const std::vector<Sample>& truths,
                                 const std::vector<TensorF>& preds,
                                 double unit_divisor = 1.0);

/// Relative L2 error of a monitored-cell time series, as a percentage:
/// 100 * ||pred - truth|| / ||truth||. A zero-norm truth series leaves the
/// error undefined (flagged, not thrown).
struct WellSeriesError {
    double percent = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
};
WellSeriesError well_series_error(const std::vector<double>& pred,
                                  const std::vector<double>& truth);

/// The flat cell index monitored for each well: its topmost perforated
/// cell (smallest depth row, leftmost on ties), in well order.
std::vector<std::size_t> monitored_cells(const SimCase& c);

/// Total CO2 pore volume indicator: the plain sum over cells of sg * phi
/// (cell volumes are uniform, so this differs from the volumetric integral
/// only by a constant factor).
double co2_pore_volume(const Field2D& sg, const Field2D& poro);

/// Wall-clock comparison of surrogate inference against the simulator.
struct TimingReport {
    double pressure_seconds = 0.0;
    double saturation_seconds = 0.0;
    double sim_seconds = 0.0;

    double speedup() const;  // sim_seconds / (pressure + saturation)
};

/// Seconds to predict every input once (normalize, forward, un-normalize).
double time_inference_seconds(const Checkpoint& model, const std::vector<TensorF>& inputs);
/// Seconds to simulate every case once.
double time_simulation_seconds(const std::vector<SimCase>& cases);
std::string timing_csv(const TimingReport& r);

/// Pooled physical-unit RMSE of a model over a sample set, split by period
/// (months at or before t_inj count as injection). A period with no samples
/// reports NaN.
struct PeriodRmse {
    double injection = std::numeric_limits<double>::quiet_NaN();
    double post = std::numeric_limits<double>::quiet_NaN();
};
PeriodRmse period_rmse(const Checkpoint& model, const std::vector<Sample>& samples,
                       double t_inj_months);

/// One row of the scenario comparison table. NaN marks a metric the
/// scenario does not cover (or a missing model).
struct ScenarioRow {
    int scenario_id = 0;
    bool present = false;
    double train_seconds = std::numeric_limits<double>::quiet_NaN();
    double pressure_rmse_inj = std::numeric_limits<double>::quiet_NaN();
    double pressure_rmse_post = std::numeric_limits<double>::quiet_NaN();
    double saturation_rmse_inj = std::numeric_limits<double>::quiet_NaN();
    double saturation_rmse_post = std::numeric_limits<double>::quiet_NaN();
};

struct ScenarioReport {
    std::vector<ScenarioRow> rows;
};

/// Builds one table row from whichever of the two per-target models exist
/// (null means the model was not trained; its metrics stay NaN and, if both
/// are missing, the row is marked absent). Each present model needs its
/// test samples. Training time sums the wall time recorded in the present
/// checkpoints.
ScenarioRow evaluate_scenario_row(int scenario_id, const Checkpoint* pressure_model,
                                  const std::vector<Sample>* pressure_test,
                                  const Checkpoint* saturation_model,
                                  const std::vector<Sample>* saturation_test,
                                  double t_inj_months);

std::string scenario_report_csv(const ScenarioReport& r);
/// Inverse of scenario_report_csv; FormatError on malformed input.
ScenarioReport scenario_report_parse(const std::string& text);

/// "t_months,rmse,pixels" rows.
std::string series_csv(const std::vector<SeriesPoint>& s);
/// Bare "month value" lines for external plotting tools.
std::string series_two_column(const std::vector<SeriesPoint>& s);
/// "row,rmse" rows, top depth row first.
std::string row_rmse_csv(const std::vector<double>& rows);

}  // namespace gcsfno

#endif
