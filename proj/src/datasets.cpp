#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "gcsfno/binio.hpp"
#include "gcsfno/datasets.hpp"

namespace gcsfno {

namespace {

constexpr char kMagic[] = "FNOD1\n";

void scale_channel(float* p, std::size_t n, double lo, double hi, bool forward) {
    const double range = hi - lo;
    if (range > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = static_cast<double>(p[i]);
            p[i] = static_cast<float>(forward ? (v - lo) / range : v * range + lo);
        }
    } else {
        // Degenerate channel: forward maps the constant to 0, invert
        // restores it.
        for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<float>(forward ? 0.0 : lo);
    }
}

void require_feature_shape(const TensorF& x, const char* where) {
    if (x.shape.size() != 3 || x.shape[0] != kNumFeatureChannels)
        throw ContractError(std::string(where) + ": expected a [5, nx, nz] feature image");
}

void require_target_shape(const TensorF& y, const char* where) {
    if (y.shape.size() != 3 || y.shape[0] != 1)
        throw ContractError(std::string(where) + ": expected a [1, nx, nz] target image");
}

double kv_stat(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("sidecar is missing " + key, 0);
    try {
        return parse_double(it->second);
    } catch (const std::exception&) {
        throw FormatError("sidecar has an unparseable value for " + key, 0);
    }
}

void write_kv_file(const std::string& path, const std::map<std::string, std::string>& kv) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open sidecar for writing: " + path);
    for (const auto& [key, value] : kv) {
        if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
            value.find('\n') != std::string::npos)
            throw ConfigError("sidecar entries must be single-line key=value pairs");
        f << key << '=' << value << '\n';
    }
    f.close();
    if (!f) throw ConfigError("failed writing sidecar: " + path);
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("missing dataset sidecar: " + path, 0);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("sidecar line without '=': " + line, 0);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace

const std::array<Scenario, 5>& Scenario::table() {
    static const std::array<Scenario, 5> rows = {{
        {1, Period::injection, RateFeature::current_rate},
        {2, Period::injection, RateFeature::cumulative_volume},
        {3, Period::post_injection, RateFeature::cumulative_volume},
        {4, Period::both, RateFeature::current_rate},
        {5, Period::both, RateFeature::cumulative_volume},
    }};
    return rows;
}

Scenario Scenario::by_id(int id) {
    if (id < 1 || id > 5)
        throw ConfigError("scenario id must be 1..5, got " + std::to_string(id));
    return table()[static_cast<std::size_t>(id - 1)];
}

bool Scenario::accepts_month(double t_months, double t_inj_months) const {
    switch (period) {
        case Period::injection:
            return t_months <= t_inj_months;
        case Period::post_injection:
            return t_months > t_inj_months;
        case Period::both:
            return true;
    }
    return false;
}

std::vector<int> select_time_steps(int t_inj, int t_total) {
    if (t_inj <= 0 || t_total <= t_inj)
        throw ConfigError("time-step selection needs 0 < t_inj < t_total");
    if (t_inj % 12 != 0)
        throw ConfigError("time-step selection is defined on whole injection years; t_inj = " +
                          std::to_string(t_inj) + " months is not year-aligned");
    std::set<int> months;
    // First injection year, monthly.
    for (int m = 1; m <= 12; ++m) months.insert(m);
    // First post-injection year, monthly (capped at the end of the run).
    for (int m = t_inj + 1; m <= std::min(t_inj + 12, t_total); ++m) months.insert(m);
    // End-of-year months across both periods.
    for (int m = 12; m <= t_total; m += 12) months.insert(m);
    return std::vector<int>(months.begin(), months.end());
}

double cumulative_injection(const WellSpec& well, const Schedule& schedule, double t_months) {
    if (well.kind != WellKind::injector) return 0.0;
    const double t_end = std::min(t_months, static_cast<double>(schedule.t_inj));
    double volume = 0.0;
    for (double m = 0.0; m < t_end; m += 1.0) {
        const double width = std::min(t_end - m, 1.0);
        volume += well.rate_during(m) * width * kSecondsPerMonth;
    }
    return volume;
}

Sample assemble_sample(const SimCase& c, const SimState& snapshot, const Scenario& scenario,
                       std::uint32_t target_code) {
    if (target_code != kTargetPressure && target_code != kTargetSaturation)
        throw ConfigError("unknown target code " + std::to_string(target_code));
    const double t_inj = static_cast<double>(c.schedule.t_inj);
    if (!scenario.accepts_month(snapshot.t_months, t_inj))
        throw ContractError("snapshot month lies outside the scenario period");
    const std::size_t nx = c.grid.nx, nz = c.grid.nz;
    if (snapshot.p.size() != nx * nz || snapshot.sg.size() != nx * nz)
        throw ContractError("snapshot does not match the case grid");

    Sample s;
    s.case_id = c.id;
    s.t_months = snapshot.t_months;
    s.x = TensorF({kNumFeatureChannels, nx, nz});
    s.y = TensorF({1, nx, nz});

    const float t_frac =
        static_cast<float>(snapshot.t_months / static_cast<double>(c.schedule.t_total));
    const Field2D& target = target_code == kTargetPressure ? snapshot.p : snapshot.sg;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iz = 0; iz < nz; ++iz) {
            s.x.at3(kChanPermH, ix, iz) = static_cast<float>(c.rock.perm_h.at(ix, iz));
            s.x.at3(kChanPoro, ix, iz) = static_cast<float>(c.rock.poro.at(ix, iz));
            s.x.at3(kChanTime, ix, iz) = t_frac;
            s.y.at3(0, ix, iz) = static_cast<float>(target.at(ix, iz));
        }
    }

    for (const WellSpec& w : c.wells) {
        if (w.kind == WellKind::producer) {
            for (std::size_t cell : w.cells)
                s.x.at3(kChanProducerLoc, cell % nx, cell / nx) = 1.0f;
            continue;
        }
        double value = 0.0;
        if (scenario.rate_feature == RateFeature::current_rate) {
            // Rate in force during the month that ends at this snapshot;
            // zero once the well is shut.
            if (snapshot.t_months <= t_inj) value = w.rate_during(snapshot.t_months - 1.0);
        } else {
            value = cumulative_injection(w, c.schedule, snapshot.t_months);
        }
        for (std::size_t cell : w.cells)
            s.x.at3(kChanRate, cell % nx, cell / nx) += static_cast<float>(value);
    }
    return s;
}

Normalizer fit_normalizer(const std::vector<Sample>& train) {
    if (train.empty()) throw ContractError("normalizer needs at least one training sample");
    Normalizer n;
    n.x_min.fill(std::numeric_limits<double>::infinity());
    n.x_max.fill(-std::numeric_limits<double>::infinity());
    n.y_min = std::numeric_limits<double>::infinity();
    n.y_max = -std::numeric_limits<double>::infinity();
    for (const Sample& s : train) {
        require_feature_shape(s.x, "fit_normalizer");
        require_target_shape(s.y, "fit_normalizer");
        const std::size_t npix = s.x.shape[1] * s.x.shape[2];
        for (std::size_t c = 0; c < kNumFeatureChannels; ++c) {
            for (std::size_t i = 0; i < npix; ++i) {
                const double v = static_cast<double>(s.x.data[c * npix + i]);
                n.x_min[c] = std::min(n.x_min[c], v);
                n.x_max[c] = std::max(n.x_max[c], v);
            }
        }
        for (const float v : s.y.data) {
            n.y_min = std::min(n.y_min, static_cast<double>(v));
            n.y_max = std::max(n.y_max, static_cast<double>(v));
        }
    }
    return n;
}

void Normalizer::apply_x(TensorF& x) const {
    require_feature_shape(x, "apply_x");
    const std::size_t npix = x.shape[1] * x.shape[2];
    for (std::size_t c = 0; c < kNumFeatureChannels; ++c)
        scale_channel(x.data.data() + c * npix, npix, x_min[c], x_max[c], true);
}

void Normalizer::invert_x(TensorF& x) const {
    require_feature_shape(x, "invert_x");
    const std::size_t npix = x.shape[1] * x.shape[2];
    for (std::size_t c = 0; c < kNumFeatureChannels; ++c)
        scale_channel(x.data.data() + c * npix, npix, x_min[c], x_max[c], false);
}

void Normalizer::apply_y(TensorF& y) const {
    require_target_shape(y, "apply_y");
    scale_channel(y.data.data(), y.data.size(), y_min, y_max, true);
}

void Normalizer::invert_y(TensorF& y) const {
    require_target_shape(y, "invert_y");
    scale_channel(y.data.data(), y.data.size(), y_min, y_max, false);
}

std::map<std::string, std::string> Normalizer::to_kv() const {
    std::map<std::string, std::string> kv;
    for (std::size_t c = 0; c < kNumFeatureChannels; ++c) {
        kv["norm.x" + std::to_string(c) + ".min"] = format_double(x_min[c]);
        kv["norm.x" + std::to_string(c) + ".max"] = format_double(x_max[c]);
    }
    kv["norm.y.min"] = format_double(y_min);
    kv["norm.y.max"] = format_double(y_max);
    return kv;
}

Normalizer Normalizer::from_kv(const std::map<std::string, std::string>& kv) {
    Normalizer n;
    for (std::size_t c = 0; c < kNumFeatureChannels; ++c) {
        n.x_min[c] = kv_stat(kv, "norm.x" + std::to_string(c) + ".min");
        n.x_max[c] = kv_stat(kv, "norm.x" + std::to_string(c) + ".max");
    }
    n.y_min = kv_stat(kv, "norm.y.min");
    n.y_max = kv_stat(kv, "norm.y.max");
    return n;
}

Dataset build_dataset(std::size_t n_cases,
                      const std::function<CaseRecord(std::size_t)>& load_case,
                      const Scenario& scenario, std::uint32_t target_code,
                      std::uint64_t split_seed, AssemblyStats* stats) {
    const std::size_t n = n_cases;
    if (n < 10) throw ContractError("dataset split needs at least 10 cases");

    // Deterministic case-level shuffle, then 80/10/10 in train/val/test
    // order. Membership depends only on the index, so cases can stream
    // through one at a time.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(split_seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }
    const std::size_t n_val = n / 10, n_test = n / 10, n_train = n - n_val - n_test;
    enum Split { kTrain, kVal, kTest };
    std::vector<Split> membership(n);
    for (std::size_t k = 0; k < n; ++k)
        membership[order[k]] = k < n_train ? kTrain : (k < n_train + n_val ? kVal : kTest);

    Dataset d;
    d.scenario = scenario;
    d.target_code = target_code;
    AssemblyStats local;
    std::set<std::string> seen_ids;
    Grid g0;
    Schedule s0;
    for (std::size_t i = 0; i < n; ++i) {
        const CaseRecord r = load_case(i);
        if (!seen_ids.insert(r.config.id).second)
            throw ContractError("duplicate case id: " + r.config.id);
        if (i == 0) {
            g0 = r.config.grid;
            s0 = r.config.schedule;
            d.t_inj_months = static_cast<double>(s0.t_inj);
            d.t_total_months = static_cast<double>(s0.t_total);
        } else {
            if (r.config.grid.nx != g0.nx || r.config.grid.nz != g0.nz)
                throw ContractError("all cases must share the grid dimensions");
            if (r.config.schedule.t_inj != s0.t_inj || r.config.schedule.t_total != s0.t_total)
                throw ContractError("all cases must share the injection schedule");
        }
        if (r.config.schedule.snapshot_every != 1)
            throw ContractError("dataset assembly needs monthly snapshots");
        const auto needed = static_cast<std::size_t>(r.config.schedule.t_total);
        if (r.result.snapshots.size() < needed)
            throw ContractError("result does not cover the schedule: " + r.config.id);

        const int t_inj = r.config.schedule.t_inj, t_total = r.config.schedule.t_total;
        std::vector<int> months;
        if (membership[i] == kTest) {
            for (int m = 1; m <= t_total; ++m) months.push_back(m);
        } else {
            months = select_time_steps(t_inj, t_total);
        }
        std::vector<Sample>& bucket =
            membership[i] == kTrain ? d.train : (membership[i] == kVal ? d.val : d.test);
        for (const int m : months) {
            const SimState& snap = r.result.snapshots[static_cast<std::size_t>(m - 1)];
            if (snap.t_months != static_cast<double>(m))
                throw ContractError("snapshots must run 1..t_total at monthly cadence: " +
                                    r.config.id);
            if (!scenario.accepts_month(snap.t_months, static_cast<double>(t_inj))) {
                ++local.filtered;
                continue;
            }
            bucket.push_back(assemble_sample(r.config, snap, scenario, target_code));
            ++local.accepted;
        }
    }
    d.normalizer = fit_normalizer(d.train);
    if (stats) *stats = local;
    return d;
}

Dataset build_dataset(const std::vector<CaseRecord>& records, const Scenario& scenario,
                      std::uint32_t target_code, std::uint64_t split_seed,
                      AssemblyStats* stats) {
    return build_dataset(
        records.size(), [&records](std::size_t i) -> CaseRecord { return records[i]; }, scenario,
        target_code, split_seed, stats);
}

std::string dataset_sidecar_path(const std::string& path) { return path + ".txt"; }

void dataset_save(const std::string& path, const Dataset& d) {
    const std::vector<const std::vector<Sample>*> splits = {&d.train, &d.val, &d.test};
    const char* split_names[] = {"train", "val", "test"};

    std::size_t n_samples = 0;
    for (const auto* s : splits) n_samples += s->size();
    if (n_samples == 0) throw ConfigError("refusing to write an empty dataset");

    const TensorF& first_x = (!d.train.empty() ? d.train : (!d.val.empty() ? d.val : d.test))
                                 .front()
                                 .x;
    require_feature_shape(first_x, "dataset_save");
    const std::size_t nx = first_x.shape[1], nz = first_x.shape[2];

    // Case numbers by order of first appearance across train, val, test.
    std::map<std::string, std::uint32_t> case_number;
    std::map<std::string, std::string> kv = d.normalizer.to_kv();
    kv["t_inj_months"] = format_double(d.t_inj_months);
    kv["t_total_months"] = format_double(d.t_total_months);
    for (std::size_t si = 0; si < splits.size(); ++si) {
        for (const Sample& s : *splits[si]) {
            if (case_number.count(s.case_id)) continue;
            const auto num = static_cast<std::uint32_t>(case_number.size());
            case_number[s.case_id] = num;
            kv["case." + std::to_string(num)] = s.case_id;
            kv["split." + s.case_id] = split_names[si];
        }
    }

    binio::Writer w(path);
    w.magic(kMagic, 6);
    w.u32(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(n_samples));
    w.u32(static_cast<std::uint32_t>(kNumFeatureChannels));
    w.u32(static_cast<std::uint32_t>(nx));
    w.u32(static_cast<std::uint32_t>(nz));
    w.u32(static_cast<std::uint32_t>(d.scenario.id));
    w.u32(d.target_code);
    for (const auto* split : splits) {
        for (const Sample& s : *split) {
            require_feature_shape(s.x, "dataset_save");
            require_target_shape(s.y, "dataset_save");
            if (s.x.shape[1] != nx || s.x.shape[2] != nz || s.y.shape[1] != nx ||
                s.y.shape[2] != nz)
                throw ContractError("dataset_save: samples must share one grid");
            w.u32(case_number.at(s.case_id));
            w.f32(static_cast<float>(s.t_months));
            w.f32_array(s.x.data.data(), s.x.data.size());
            w.f32_array(s.y.data.data(), s.y.data.size());
        }
    }
    w.close();
    write_kv_file(dataset_sidecar_path(path), kv);
}

Dataset dataset_load(const std::string& path) {
    binio::Reader r(path);
    r.magic(kMagic, 6);
    const std::uint32_t version = r.u32();
    if (version != kDatasetVersion)
        throw FormatError("unsupported dataset version " + std::to_string(version), 6);
    const std::uint32_t n_samples = r.u32();
    const std::uint32_t n_channels = r.u32();
    const std::uint32_t nx = r.u32();
    const std::uint32_t nz = r.u32();
    const std::uint32_t scenario_id = r.u32();
    const std::uint32_t target_code = r.u32();
    if (n_channels != kNumFeatureChannels)
        throw FormatError("dataset must have " + std::to_string(kNumFeatureChannels) +
                              " feature channels, found " + std::to_string(n_channels),
                          14);
    if (nx < 1 || nz < 1) throw FormatError("dataset grid dimensions must be positive", 18);
    if (scenario_id < 1 || scenario_id > 5)
        throw FormatError("dataset scenario id must be 1..5", 26);
    if (target_code != kTargetPressure && target_code != kTargetSaturation)
        throw FormatError("unknown dataset target code", 30);

    const std::map<std::string, std::string> kv = read_kv_file(dataset_sidecar_path(path));
    Dataset d;
    d.scenario = Scenario::by_id(static_cast<int>(scenario_id));
    d.target_code = target_code;
    d.normalizer = Normalizer::from_kv(kv);
    d.t_inj_months = kv_stat(kv, "t_inj_months");
    d.t_total_months = kv_stat(kv, "t_total_months");

    for (std::uint32_t i = 0; i < n_samples; ++i) {
        const std::uint32_t num = r.u32();
        Sample s;
        s.t_months = static_cast<double>(r.f32());
        s.x = TensorF({kNumFeatureChannels, nx, nz});
        r.f32_array(s.x.data.data(), s.x.data.size());
        s.y = TensorF({1, nx, nz});
        r.f32_array(s.y.data.data(), s.y.data.size());

        const auto id_it = kv.find("case." + std::to_string(num));
        if (id_it == kv.end())
            throw FormatError("sidecar is missing case." + std::to_string(num), r.pos());
        s.case_id = id_it->second;
        const auto split_it = kv.find("split." + s.case_id);
        if (split_it == kv.end())
            throw FormatError("sidecar is missing split." + s.case_id, r.pos());
        if (split_it->second == "train")
            d.train.push_back(std::move(s));
        else if (split_it->second == "val")
            d.val.push_back(std::move(s));
        else if (split_it->second == "test")
            d.test.push_back(std::move(s));
        else
            throw FormatError("unknown split name: " + split_it->second, r.pos());
    }
    r.require_end();
    return d;
}

}  // namespace gcsfno
