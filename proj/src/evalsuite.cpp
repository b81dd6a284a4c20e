#include "gcsfno/evalsuite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "gcsfno/errors.hpp"

namespace gcsfno {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string na_cell(double v) {
    return std::isfinite(v) ? format_double(v) : std::string("NA");
}

double parse_na_cell(const std::string& s) {
    if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
    try {
        return parse_double(s);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("scenario report: ") + e.what(), 0);
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

/// All tensors must be [1, nx, nz] with one prediction per truth sample.
void require_matched(const std::vector<Sample>& truths, const std::vector<TensorF>& preds) {
    if (truths.empty()) throw ContractError("error metric over an empty sample set");
    if (preds.size() != truths.size())
        throw ContractError("prediction count does not match sample count");
    const std::vector<std::size_t>& s0 = truths.front().y.shape;
    if (s0.size() != 3 || s0[0] != 1)
        throw ContractError("error metric expects [1, nx, nz] target tensors");
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].y.shape != s0)
            throw ContractError("samples mix grid shapes");
        if (preds[i].shape != s0)
            throw ContractError("prediction shape does not match its sample");
    }
}

struct SqAcc {
    double sq = 0.0;
    std::size_t n = 0;

    void add(float pred, float truth) {
        const double d = static_cast<double>(pred) - static_cast<double>(truth);
        sq += d * d;
        ++n;
    }
    double rmse(double unit_divisor) const {
        return std::sqrt(sq / static_cast<double>(n)) / unit_divisor;
    }
};

double kv_seconds(const Checkpoint& model) {
    const auto it = model.meta.kv.find("train.seconds");
    if (it == model.meta.kv.end()) return std::numeric_limits<double>::quiet_NaN();
    return parse_double(it->second);
}

}  // namespace

double report_unit_divisor(std::uint32_t target_code) {
    return target_code == kTargetPressure ? kPascalPerPsia : 1.0;
}

TensorF model_predict(const Checkpoint& model, const TensorF& x) {
    const FnoArch& arch = model.params.arch;
    if (x.shape.size() != 3 || x.shape[0] != arch.in_channels ||
        x.shape[1] != model.meta.nx || x.shape[2] != model.meta.nz)
        throw ContractError("model_predict: input grid does not match the model's");
    const Normalizer norm = Normalizer::from_kv(model.meta.kv);
    TensorF xn = x;
    norm.apply_x(xn);
    TensorF y = fno_forward(model.params, xn);
    norm.invert_y(y);
    return y;
}

void CompositeModel::validate() const {
    const CheckpointMeta& a = injection_model.meta;
    const CheckpointMeta& b = post_model.meta;
    if (a.target_code != b.target_code)
        throw ContractError("composite model: constituents target different quantities");
    if (a.nx != b.nx || a.nz != b.nz)
        throw ContractError("composite model: constituents trained on different grids");
    if (a.t_inj_months != t_inj_months || b.t_inj_months != t_inj_months)
        throw ContractError("composite model: injection-period length disagrees");
    if (Scenario::by_id(static_cast<int>(a.scenario_id)).period == Period::post_injection)
        throw ContractError("composite model: injection constituent covers no injection months");
    if (Scenario::by_id(static_cast<int>(b.scenario_id)).period == Period::injection)
        throw ContractError("composite model: post constituent covers no post-injection months");
}

TensorF composite_predict(const CompositeModel& cm, const TensorF& x, double t_months) {
    cm.validate();
    const Checkpoint& m = t_months <= cm.t_inj_months ? cm.injection_model : cm.post_model;
    return model_predict(m, x);
}

double pooled_rmse(const std::vector<Sample>& truths, const std::vector<TensorF>& preds,
                   double unit_divisor) {
    require_matched(truths, preds);
    SqAcc acc;
    for (std::size_t i = 0; i < truths.size(); ++i)
        for (std::size_t k = 0; k < truths[i].y.size(); ++k)
            acc.add(preds[i].data[k], truths[i].y.data[k]);
    return acc.rmse(unit_divisor);
}

std::vector<SeriesPoint> rmse_vs_time(const std::vector<Sample>& truths,
                                      const std::vector<TensorF>& preds, double unit_divisor) {
    require_matched(truths, preds);
    std::map<double, SqAcc> by_month;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        SqAcc& acc = by_month[truths[i].t_months];
        for (std::size_t k = 0; k < truths[i].y.size(); ++k)
            acc.add(preds[i].data[k], truths[i].y.data[k]);
    }
    std::vector<SeriesPoint> out;
    out.reserve(by_month.size());
    for (const auto& [t, acc] : by_month)
        out.push_back({t, acc.rmse(unit_divisor), acc.n});
    return out;
}

std::vector<double> rmse_per_row(const std::vector<Sample>& truths,
                                 const std::vector<TensorF>& preds, double unit_divisor) {
    require_matched(truths, preds);
    const std::size_t nx = truths.front().y.shape[1];
    const std::size_t nz = truths.front().y.shape[2];
    std::vector<SqAcc> rows(nz);
    for (std::size_t i = 0; i < truths.size(); ++i)
        for (std::size_t ix = 0; ix < nx; ++ix)
            for (std::size_t iz = 0; iz < nz; ++iz)
                rows[iz].add(preds[i].at3(0, ix, iz), truths[i].y.at3(0, ix, iz));
    std::vector<double> out(nz);
    for (std::size_t iz = 0; iz < nz; ++iz) out[iz] = rows[iz].rmse(unit_divisor);
    return out;
}

WellSeriesError well_series_error(const std::vector<double>& pred,
                                  const std::vector<double>& truth) {
    if (truth.empty()) throw ContractError("well series error over an empty series");
    if (pred.size() != truth.size())
        throw ContractError("well series lengths differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = pred[i] - truth[i];
        num += d * d;
        den += truth[i] * truth[i];
    }
    if (den == 0.0) return {};
    return {100.0 * std::sqrt(num / den), true};
}

std::vector<std::size_t> monitored_cells(const SimCase& c) {
    std::vector<std::size_t> out;
    out.reserve(c.wells.size());
    for (const WellSpec& w : c.wells) {
        if (w.cells.empty()) throw ContractError("well '" + w.name + "' has no perforations");
        std::size_t best = w.cells.front();
        for (std::size_t cell : w.cells) {
            const auto key = [&](std::size_t f) {
                return std::pair<std::size_t, std::size_t>{f / c.grid.nx, f % c.grid.nx};
            };
            if (key(cell) < key(best)) best = cell;
        }
        out.push_back(best);
    }
    return out;
}

double co2_pore_volume(const Field2D& sg, const Field2D& poro) {
    if (sg.nx != poro.nx || sg.nz != poro.nz)
        throw ContractError("pore-volume fields have different shapes");
    double sum = 0.0;
    for (std::size_t i = 0; i < sg.size(); ++i) sum += sg.v[i] * poro.v[i];
    return sum;
}

double TimingReport::speedup() const { return sim_seconds / (pressure_seconds + saturation_seconds); }

double time_inference_seconds(const Checkpoint& model, const std::vector<TensorF>& inputs) {
    double sink = 0.0;
    const auto t0 = Clock::now();
    for (const TensorF& x : inputs) {
        const TensorF y = model_predict(model, x);
        sink += static_cast<double>(y.data.front());
    }
    const double dt = seconds_since(t0);
    if (!std::isfinite(sink)) throw NumericError("non-finite prediction during timing");
    return dt;
}

double time_simulation_seconds(const std::vector<SimCase>& cases) {
    std::size_t sink = 0;
    const auto t0 = Clock::now();
    for (const SimCase& c : cases) sink += simulate(c).snapshots.size();
    const double dt = seconds_since(t0);
    if (sink == 0 && !cases.empty()) throw ContractError("simulator produced no snapshots");
    return dt;
}

std::string timing_csv(const TimingReport& r) {
    std::ostringstream os;
    os << "component,model_seconds,simulator_seconds,speedup\n";
    os << "pressure," << format_double(r.pressure_seconds) << ",NA,NA\n";
    os << "saturation," << format_double(r.saturation_seconds) << ",NA,NA\n";
    os << "total," << format_double(r.pressure_seconds + r.saturation_seconds) << ','
       << format_double(r.sim_seconds) << ',' << na_cell(r.speedup()) << '\n';
    return os.str();
}

PeriodRmse period_rmse(const Checkpoint& model, const std::vector<Sample>& samples,
                       double t_inj_months) {
    const double unit = report_unit_divisor(model.meta.target_code);
    SqAcc inj, post;
    for (const Sample& s : samples) {
        const TensorF yhat = model_predict(model, s.x);
        if (s.y.shape != yhat.shape)
            throw ContractError("sample target shape does not match the model output");
        SqAcc& acc = s.t_months <= t_inj_months ? inj : post;
        for (std::size_t k = 0; k < s.y.size(); ++k) acc.add(yhat.data[k], s.y.data[k]);
    }
    PeriodRmse out;
    if (inj.n > 0) out.injection = inj.rmse(unit);
    if (post.n > 0) out.post = post.rmse(unit);
    return out;
}

ScenarioRow evaluate_scenario_row(int scenario_id, const Checkpoint* pressure_model,
                                  const std::vector<Sample>* pressure_test,
                                  const Checkpoint* saturation_model,
                                  const std::vector<Sample>* saturation_test,
                                  double t_inj_months) {
    ScenarioRow row;
    row.scenario_id = scenario_id;
    row.present = pressure_model != nullptr || saturation_model != nullptr;
    double seconds = 0.0;
    bool timed = false;
    const auto account = [&](const Checkpoint& m) {
        const double s = kv_seconds(m);
        if (std::isfinite(s)) {
            seconds += s;
            timed = true;
        }
    };
    if (pressure_model != nullptr) {
        if (pressure_model->meta.target_code != kTargetPressure)
            throw ContractError("pressure slot holds a non-pressure model");
        if (pressure_test == nullptr)
            throw ContractError("pressure model present without test samples");
        const PeriodRmse pr = period_rmse(*pressure_model, *pressure_test, t_inj_months);
        row.pressure_rmse_inj = pr.injection;
        row.pressure_rmse_post = pr.post;
        account(*pressure_model);
    }
    if (saturation_model != nullptr) {
        if (saturation_model->meta.target_code != kTargetSaturation)
            throw ContractError("saturation slot holds a non-saturation model");
        if (saturation_test == nullptr)
            throw ContractError("saturation model present without test samples");
        const PeriodRmse sr = period_rmse(*saturation_model, *saturation_test, t_inj_months);
        row.saturation_rmse_inj = sr.injection;
        row.saturation_rmse_post = sr.post;
        account(*saturation_model);
    }
    if (timed) row.train_seconds = seconds;
    return row;
}

namespace {
const char* const kScenarioHeader =
    "scenario,status,train_seconds,pressure_rmse_inj_psia,pressure_rmse_post_psia,"
    "saturation_rmse_inj,saturation_rmse_post";
}

std::string scenario_report_csv(const ScenarioReport& r) {
    std::ostringstream os;
    os << kScenarioHeader << '\n';
    for (const ScenarioRow& row : r.rows)
        os << row.scenario_id << ',' << (row.present ? "ok" : "absent") << ','
           << na_cell(row.train_seconds) << ',' << na_cell(row.pressure_rmse_inj) << ','
           << na_cell(row.pressure_rmse_post) << ',' << na_cell(row.saturation_rmse_inj) << ','
           << na_cell(row.saturation_rmse_post) << '\n';
    return os.str();
}

ScenarioReport scenario_report_parse(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kScenarioHeader)
        throw FormatError("scenario report: unexpected header", 0);
    ScenarioReport out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != 7)
            throw FormatError("scenario report: expected 7 columns, got " +
                              std::to_string(cells.size()), 0);
        ScenarioRow row;
        try {
            std::size_t used = 0;
            row.scenario_id = std::stoi(cells[0], &used);
            if (used != cells[0].size()) throw std::invalid_argument(cells[0]);
        } catch (const std::exception&) {
            throw FormatError("scenario report: bad scenario id '" + cells[0] + "'", 0);
        }
        if (cells[1] == "ok")
            row.present = true;
        else if (cells[1] == "absent")
            row.present = false;
        else
            throw FormatError("scenario report: bad status '" + cells[1] + "'", 0);
        row.train_seconds = parse_na_cell(cells[2]);
        row.pressure_rmse_inj = parse_na_cell(cells[3]);
        row.pressure_rmse_post = parse_na_cell(cells[4]);
        row.saturation_rmse_inj = parse_na_cell(cells[5]);
        row.saturation_rmse_post = parse_na_cell(cells[6]);
        out.rows.push_back(row);
    }
    return out;
}

std::string series_csv(const std::vector<SeriesPoint>& s) {
    std::ostringstream os;
    os << "t_months,rmse,pixels\n";
    for (const SeriesPoint& p : s)
        os << format_double(p.t_months) << ',' << format_double(p.value) << ',' << p.pixels << '\n';
    return os.str();
}

std::string series_two_column(const std::vector<SeriesPoint>& s) {
    std::ostringstream os;
    for (const SeriesPoint& p : s) os << format_double(p.t_months) << ' ' << format_double(p.value) << '\n';
    return os.str();
}

std::string row_rmse_csv(const std::vector<double>& rows) {
    std::ostringstream os;
    os << "row,rmse\n";
    for (std::size_t i = 0; i < rows.size(); ++i) os << i << ',' << format_double(rows[i]) << '\n';
    return os.str();
}

}  // namespace gcsfno
