#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "gcsfno/datasets.hpp"

using namespace gcsfno;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const char* stem) {
        std::random_device rd;
        path = (std::filesystem::temp_directory_path() /
                (std::string(stem) + "-" + std::to_string(rd()) + ".bin"))
                   .string();
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
        std::filesystem::remove(path + ".txt", ec);
    }
};

// Independent statement of the reduced-cadence policy: a month is kept iff
// it falls in the first year, is an end-of-year month, or falls in the
// first year after injection stops.
std::vector<int> cadence_oracle(int t_inj, int t_total) {
    std::vector<int> out;
    for (int m = 1; m <= t_total; ++m) {
        const bool first_year = m <= 12;
        const bool year_end = m % 12 == 0;
        const bool first_post_year = m > t_inj && m <= t_inj + 12;
        if (first_year || year_end || first_post_year) out.push_back(m);
    }
    return out;
}

// A small fabricated case whose fields encode (k, month, cell) so channel
// mix-ups are visible. 12 months of injection, 36 total, monthly snapshots.
CaseRecord make_record(int k, double p_scale = 1.0) {
    SimCase c;
    c.id = "case_" + std::to_string(k);
    c.grid.nx = 6;
    c.grid.nz = 3;
    c.grid.dx = 10.0;
    c.grid.dz = 2.0;
    const std::size_t nx = c.grid.nx, nz = c.grid.nz;
    c.rock.perm_h = Field2D(nx, nz);
    c.rock.perm_v = Field2D(nx, nz);
    c.rock.poro = Field2D(nx, nz, 0.25);
    for (std::size_t iz = 0; iz < nz; ++iz)
        for (std::size_t ix = 0; ix < nx; ++ix) {
            c.rock.perm_h.at(ix, iz) =
                1e-13 * (1.0 + static_cast<double>(ix) + 10.0 * static_cast<double>(iz) +
                         0.5 * k);
            c.rock.perm_v.at(ix, iz) = 0.1 * c.rock.perm_h.at(ix, iz);
        }

    WellSpec inj;
    inj.kind = WellKind::injector;
    inj.name = "inj";
    inj.cells = {c.grid.idx(1, 1)};
    inj.rate_schedule = {1e-7 * (k + 1)};
    WellSpec prod;
    prod.kind = WellKind::producer;
    prod.name = "prod";
    prod.cells = {c.grid.idx(4, 1)};
    prod.well_index = {1e-12};
    prod.bhp = 1.8e7;
    prod.bhp_datum_depth = c.grid.cell_depth(1);
    c.wells = {inj, prod};
    c.schedule = {12, 36, 1};

    SimResult res;
    res.case_id = c.id;
    for (int m = 1; m <= c.schedule.t_total; ++m) {
        SimState s;
        s.t_months = m;
        s.p = Field2D(nx, nz);
        s.sg = Field2D(nx, nz);
        for (std::size_t i = 0; i < nx * nz; ++i) {
            s.p.v[i] = (2.0e7 + 1.0e4 * k + 100.0 * m + static_cast<double>(i)) * p_scale;
            s.sg.v[i] = std::min(0.7, 0.01 * k + 0.001 * (m + static_cast<double>(i)));
        }
        res.snapshots.push_back(std::move(s));
    }
    return {c, res};
}

std::vector<CaseRecord> make_records(int n, int scaled_k = -1, double p_scale = 10.0) {
    std::vector<CaseRecord> records;
    for (int k = 0; k < n; ++k) records.push_back(make_record(k, k == scaled_k ? p_scale : 1.0));
    return records;
}

std::set<std::string> split_ids(const std::vector<Sample>& split) {
    std::set<std::string> ids;
    for (const Sample& s : split) ids.insert(s.case_id);
    return ids;
}

std::vector<int> case_months(const std::vector<Sample>& split, const std::string& id) {
    std::vector<int> months;
    for (const Sample& s : split)
        if (s.case_id == id) months.push_back(static_cast<int>(s.t_months));
    return months;
}

void corrupt_byte(const std::string& path, std::size_t offset, char value) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(value);
}

}  // namespace

TEST_CASE("time-step selection matches an independent policy enumeration") {
    const std::vector<int> big = select_time_steps(360, 960);
    CHECK(big == cadence_oracle(360, 960));
    CHECK(big.size() == 102);
    const double reduction = 1.0 - static_cast<double>(big.size()) / 960.0;
    CHECK(reduction == doctest::Approx(0.89375).epsilon(1e-12));
    CHECK(reduction >= 0.89);  // the advertised saving vs monthly cadence

    std::vector<int> expected = {24, 48};
    for (int m = 1; m <= 12; ++m) expected.push_back(m);
    for (int m = 25; m <= 36; ++m) expected.push_back(m);
    std::sort(expected.begin(), expected.end());
    const std::vector<int> small = select_time_steps(24, 48);
    CHECK(small == expected);
    CHECK(small == cadence_oracle(24, 48));
    CHECK(small.size() == 26);

    // Sorted and deduplicated by construction.
    CHECK(std::is_sorted(big.begin(), big.end()));
    CHECK(std::adjacent_find(big.begin(), big.end()) == big.end());

    CHECK_THROWS_AS(select_time_steps(30, 96), ConfigError);  // not year-aligned
    CHECK_THROWS_AS(select_time_steps(0, 96), ConfigError);
    CHECK_THROWS_AS(select_time_steps(24, 24), ConfigError);
}

TEST_CASE("cumulative injection integrates the rate schedule and plateaus") {
    Schedule sched{24, 48, 1};
    WellSpec w;
    w.kind = WellKind::injector;
    w.cells = {0};

    w.rate_schedule = {2e-6};
    CHECK(cumulative_injection(w, sched, 10.0) ==
          doctest::Approx(2e-6 * 10.0 * kSecondsPerMonth).epsilon(1e-12));
    // Plateau after shut-in: bitwise equal to the end-of-injection volume.
    const double ultimate = cumulative_injection(w, sched, 24.0);
    CHECK(ultimate == doctest::Approx(2e-6 * 24.0 * kSecondsPerMonth).epsilon(1e-12));
    CHECK(cumulative_injection(w, sched, 30.0) == ultimate);
    CHECK(cumulative_injection(w, sched, 48.0) == ultimate);

    // Two-period schedule: 12 months at q1, then q2.
    w.rate_schedule.assign(12, 2e-6);
    w.rate_schedule.resize(24, 1e-6);
    CHECK(cumulative_injection(w, sched, 18.0) ==
          doctest::Approx((12.0 * 2e-6 + 6.0 * 1e-6) * kSecondsPerMonth).epsilon(1e-12));
    CHECK(cumulative_injection(w, sched, 12.5) ==
          doctest::Approx((12.0 * 2e-6 + 0.5 * 1e-6) * kSecondsPerMonth).epsilon(1e-12));
    CHECK(cumulative_injection(w, sched, 0.0) == 0.0);

    WellSpec prod;
    prod.kind = WellKind::producer;
    CHECK(cumulative_injection(prod, sched, 18.0) == 0.0);
}

TEST_CASE("scenario table and period membership") {
    const auto& rows = Scenario::table();
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].id == 1);
    CHECK(rows[0].period == Period::injection);
    CHECK(rows[0].rate_feature == RateFeature::current_rate);
    CHECK(rows[1].period == Period::injection);
    CHECK(rows[1].rate_feature == RateFeature::cumulative_volume);
    CHECK(rows[2].period == Period::post_injection);
    CHECK(rows[2].rate_feature == RateFeature::cumulative_volume);
    CHECK(rows[3].period == Period::both);
    CHECK(rows[3].rate_feature == RateFeature::current_rate);
    CHECK(rows[4].period == Period::both);
    CHECK(rows[4].rate_feature == RateFeature::cumulative_volume);
    for (int id = 1; id <= 5; ++id) CHECK(Scenario::by_id(id).id == id);
    CHECK_THROWS_AS(Scenario::by_id(0), ConfigError);
    CHECK_THROWS_AS(Scenario::by_id(6), ConfigError);

    // The boundary month t == t_inj belongs to the injection period.
    CHECK(Scenario::by_id(1).accepts_month(24.0, 24.0));
    CHECK_FALSE(Scenario::by_id(1).accepts_month(25.0, 24.0));
    CHECK_FALSE(Scenario::by_id(3).accepts_month(24.0, 24.0));
    CHECK(Scenario::by_id(3).accepts_month(25.0, 24.0));
    CHECK(Scenario::by_id(4).accepts_month(1.0, 24.0));
    CHECK(Scenario::by_id(4).accepts_month(48.0, 24.0));
}

TEST_CASE("sample assembly maps fields, wells and time onto channels") {
    const CaseRecord rec = make_record(3);
    const SimCase& c = rec.config;
    const std::size_t nx = c.grid.nx, nz = c.grid.nz;
    const SimState& snap5 = rec.result.snapshots[4];  // month 5

    const Sample s = assemble_sample(c, snap5, Scenario::by_id(1), kTargetPressure);
    CHECK(s.case_id == "case_3");
    CHECK(s.t_months == 5.0);
    REQUIRE(s.x.shape == std::vector<std::size_t>({5, nx, nz}));
    REQUIRE(s.y.shape == std::vector<std::size_t>({1, nx, nz}));

    // Exhaustive scan: rock channels must match the x-fastest fields cell
    // by cell (catches any x/z transposition), the time channel must be
    // spatially constant, and the target must be the snapshot pressure.
    std::size_t producer_ones = 0, rate_nonzero = 0;
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iz = 0; iz < nz; ++iz) {
            CHECK(s.x.at3(kChanPermH, ix, iz) ==
                  static_cast<float>(c.rock.perm_h.at(ix, iz)));
            CHECK(s.x.at3(kChanPoro, ix, iz) == static_cast<float>(c.rock.poro.at(ix, iz)));
            CHECK(s.x.at3(kChanTime, ix, iz) == static_cast<float>(5.0 / 36.0));
            CHECK(s.y.at3(0, ix, iz) == static_cast<float>(snap5.p.at(ix, iz)));
            const float loc = s.x.at3(kChanProducerLoc, ix, iz);
            CHECK((loc == 0.0f || loc == 1.0f));
            if (loc == 1.0f) ++producer_ones;
            if (s.x.at3(kChanRate, ix, iz) != 0.0f) ++rate_nonzero;
        }
    CHECK(producer_ones == 1);
    CHECK(s.x.at3(kChanProducerLoc, 4, 1) == 1.0f);
    CHECK(rate_nonzero == 1);
    CHECK(s.x.at3(kChanRate, 1, 1) == static_cast<float>(4e-7));  // current rate, k=3

    // Cumulative-volume feature at the same month.
    const Sample s2 = assemble_sample(c, snap5, Scenario::by_id(2), kTargetSaturation);
    CHECK(s2.x.at3(kChanRate, 1, 1) ==
          static_cast<float>(4e-7 * 5.0 * kSecondsPerMonth));
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iz = 0; iz < nz; ++iz)
            CHECK(s2.y.at3(0, ix, iz) == static_cast<float>(snap5.sg.at(ix, iz)));

    // Post-injection: the cumulative feature is identical across months,
    // the current-rate feature is all zeros.
    const Sample post1 =
        assemble_sample(c, rec.result.snapshots[12], Scenario::by_id(3), kTargetPressure);
    const Sample post2 =
        assemble_sample(c, rec.result.snapshots[29], Scenario::by_id(3), kTargetPressure);
    bool same_rate_channel = true;
    const std::size_t npix = nx * nz;
    for (std::size_t i = 0; i < npix; ++i)
        if (post1.x.data[kChanRate * npix + i] != post2.x.data[kChanRate * npix + i])
            same_rate_channel = false;
    CHECK(same_rate_channel);

    const Sample shut =
        assemble_sample(c, rec.result.snapshots[19], Scenario::by_id(4), kTargetPressure);
    for (std::size_t i = 0; i < npix; ++i) CHECK(shut.x.data[kChanRate * npix + i] == 0.0f);
}

TEST_CASE("scenario 5 rate channel grows during injection then stays constant") {
    const CaseRecord rec = make_record(1);
    const Scenario sc = Scenario::by_id(5);
    double prev = -1.0;
    double plateau = -1.0;
    for (int m = 1; m <= 36; ++m) {
        const Sample s =
            assemble_sample(rec.config, rec.result.snapshots[m - 1], sc, kTargetPressure);
        const double v = s.x.at3(kChanRate, 1, 1);
        CHECK(v >= prev);
        prev = v;
        if (m == 12) plateau = v;
        if (m > 12) CHECK(v == plateau);
    }
    CHECK(plateau > 0.0);
}

TEST_CASE("sample assembly rejects out-of-period months and bad targets") {
    const CaseRecord rec = make_record(0);
    CHECK_THROWS_AS(
        assemble_sample(rec.config, rec.result.snapshots[12], Scenario::by_id(1), kTargetPressure),
        ContractError);
    CHECK_THROWS_AS(
        assemble_sample(rec.config, rec.result.snapshots[5], Scenario::by_id(3), kTargetPressure),
        ContractError);
    // Boundary month t_inj itself is an injection-period sample.
    CHECK_NOTHROW(
        assemble_sample(rec.config, rec.result.snapshots[11], Scenario::by_id(1), kTargetPressure));
    CHECK_THROWS_AS(assemble_sample(rec.config, rec.result.snapshots[0], Scenario::by_id(1), 7u),
                    ConfigError);
}

TEST_CASE("normalizer: train statistics, round trip, degenerate channels") {
    // Hand-made samples with a constant porosity channel and known ranges.
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Sample> train;
    for (int i = 0; i < 4; ++i) {
        Sample s;
        s.case_id = "c" + std::to_string(i);
        s.t_months = i + 1;
        s.x = TensorF({5, 4, 3});
        s.y = TensorF({1, 4, 3});
        for (std::size_t c = 0; c < 5; ++c)
            for (std::size_t p = 0; p < 12; ++p)
                s.x.data[c * 12 + p] =
                    c == kChanPoro ? 0.3f : static_cast<float>((c + 1) * unit(rng));
        for (std::size_t p = 0; p < 12; ++p)
            s.y.data[p] = static_cast<float>(2e7 + 1e5 * unit(rng));
        train.push_back(std::move(s));
    }

    const Normalizer n = fit_normalizer(train);
    CHECK(n.x_min[kChanPoro] == doctest::Approx(0.3).epsilon(1e-7));
    CHECK(n.x_max[kChanPoro] == n.x_min[kChanPoro]);

    // Normalized training data spans exactly [0, 1] on non-degenerate
    // channels and maps the degenerate one to zero.
    std::array<float, 5> lo;
    std::array<float, 5> hi;
    lo.fill(1e30f);
    hi.fill(-1e30f);
    float ylo = 1e30f, yhi = -1e30f;
    for (const Sample& s : train) {
        TensorF x = s.x;
        TensorF y = s.y;
        n.apply_x(x);
        n.apply_y(y);
        for (std::size_t c = 0; c < 5; ++c)
            for (std::size_t p = 0; p < 12; ++p) {
                lo[c] = std::min(lo[c], x.data[c * 12 + p]);
                hi[c] = std::max(hi[c], x.data[c * 12 + p]);
            }
        for (float v : y.data) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    }
    for (std::size_t c = 0; c < 5; ++c) {
        if (c == kChanPoro) {
            CHECK(lo[c] == 0.0f);
            CHECK(hi[c] == 0.0f);
        } else {
            CHECK(lo[c] == doctest::Approx(0.0).epsilon(1e-6));
            CHECK(hi[c] == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    CHECK(ylo == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(yhi == doctest::Approx(1.0).epsilon(1e-6));

    // Round trip: apply then invert restores physical values within f32
    // rounding (including the constant channel).
    for (const Sample& s : train) {
        TensorF x = s.x;
        TensorF y = s.y;
        n.apply_x(x);
        n.invert_x(x);
        n.apply_y(y);
        n.invert_y(y);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double ref = std::abs(static_cast<double>(s.x.data[i]));
            CHECK(std::abs(x.data[i] - s.x.data[i]) <= 1e-5 * std::max(ref, 1e-12));
        }
        for (std::size_t i = 0; i < y.data.size(); ++i)
            CHECK(std::abs(y.data[i] - s.y.data[i]) <=
                  1e-5 * std::abs(static_cast<double>(s.y.data[i])));
    }

    CHECK_THROWS_AS(fit_normalizer({}), ContractError);
}

TEST_CASE("dataset build: deterministic disjoint case-level split") {
    const auto records = make_records(12);
    const Dataset d1 = build_dataset(records, Scenario::by_id(4), kTargetPressure, 42);
    const Dataset d2 = build_dataset(records, Scenario::by_id(4), kTargetPressure, 42);

    const auto train_ids = split_ids(d1.train);
    const auto val_ids = split_ids(d1.val);
    const auto test_ids = split_ids(d1.test);
    CHECK(train_ids.size() == 10);
    CHECK(val_ids.size() == 1);
    CHECK(test_ids.size() == 1);

    CHECK(split_ids(d2.train) == train_ids);
    CHECK(split_ids(d2.val) == val_ids);
    CHECK(split_ids(d2.test) == test_ids);

    std::set<std::string> all = train_ids;
    for (const auto& id : val_ids) CHECK(all.insert(id).second);
    for (const auto& id : test_ids) CHECK(all.insert(id).second);
    CHECK(all.size() == 12);
}

TEST_CASE("dataset build: cadence per split and period filtering") {
    const auto records = make_records(12);

    AssemblyStats stats4;
    const Dataset d4 = build_dataset(records, Scenario::by_id(4), kTargetPressure, 42, &stats4);
    const std::vector<int> reduced = select_time_steps(12, 36);
    REQUIRE(reduced.size() == 25);
    CHECK(d4.train.size() == 10 * 25);
    CHECK(d4.val.size() == 25);
    CHECK(d4.test.size() == 36);
    CHECK(stats4.accepted == d4.train.size() + d4.val.size() + d4.test.size());
    CHECK(stats4.filtered == 0);

    // Every train case follows the reduced cadence exactly; the test case
    // keeps the full monthly cadence.
    for (const std::string& id : split_ids(d4.train))
        CHECK(case_months(d4.train, id) == reduced);
    std::vector<int> monthly(36);
    for (int m = 1; m <= 36; ++m) monthly[m - 1] = m;
    CHECK(case_months(d4.test, *split_ids(d4.test).begin()) == monthly);

    // Injection-only scenario: 12 of the 25 reduced months fall in the
    // period (and 12 of 36 monthly ones); the rest are filtered.
    AssemblyStats stats1;
    const Dataset d1 = build_dataset(records, Scenario::by_id(1), kTargetPressure, 42, &stats1);
    for (const Sample& s : d1.train) CHECK(s.t_months <= 12.0);
    for (const Sample& s : d1.test) CHECK(s.t_months <= 12.0);
    CHECK(d1.train.size() == 10 * 12);
    CHECK(d1.test.size() == 12);
    CHECK(stats1.accepted == 11 * 12 + 12);
    CHECK(stats1.filtered == 11 * 13 + 24);

    // Post-injection scenario: months 13..24 and 36 from the reduced set.
    AssemblyStats stats3;
    const Dataset d3 = build_dataset(records, Scenario::by_id(3), kTargetPressure, 42, &stats3);
    for (const Sample& s : d3.train) CHECK(s.t_months > 12.0);
    const std::vector<int> post_reduced = {13, 14, 15, 16, 17, 18, 19, 20,
                                           21, 22, 23, 24, 36};
    for (const std::string& id : split_ids(d3.train))
        CHECK(case_months(d3.train, id) == post_reduced);
    CHECK(d3.test.size() == 24);
    CHECK(stats3.accepted + stats3.filtered == stats1.accepted + stats1.filtered);
}

TEST_CASE("dataset build: normalizer comes from the training split only") {
    const auto records = make_records(12);
    const Dataset probe = build_dataset(records, Scenario::by_id(4), kTargetPressure, 42);
    const std::string test_id = probe.test.front().case_id;
    const int test_k = std::stoi(test_id.substr(std::string("case_").size()));

    // Rebuild with the test case's pressures scaled up 10x: the same seed
    // reproduces the membership, so the normalizer must not see them.
    const Dataset d =
        build_dataset(make_records(12, test_k), Scenario::by_id(4), kTargetPressure, 42);
    CHECK(d.test.front().case_id == test_id);

    double max_norm = -1e30;
    for (const Sample& s : d.test) {
        TensorF y = s.y;
        d.normalizer.apply_y(y);  // applying outside the fit range must not throw
        for (float v : y.data) max_norm = std::max(max_norm, static_cast<double>(v));
    }
    CHECK(max_norm > 1.5);  // test values land far outside [0, 1]

    double train_max = -1e30;
    for (const Sample& s : d.train)
        for (float v : s.y.data) train_max = std::max(train_max, static_cast<double>(v));
    CHECK(d.normalizer.y_max == doctest::Approx(train_max).epsilon(1e-7));
}

TEST_CASE("dataset build rejects malformed inputs") {
    auto records = make_records(12);

    CHECK_THROWS_AS(
        build_dataset(make_records(9), Scenario::by_id(4), kTargetPressure, 1), ContractError);

    auto dup = records;
    dup[3].config.id = dup[2].config.id;
    CHECK_THROWS_AS(build_dataset(dup, Scenario::by_id(4), kTargetPressure, 1), ContractError);

    auto coarse = records;
    coarse[5].config.schedule.snapshot_every = 2;
    CHECK_THROWS_AS(build_dataset(coarse, Scenario::by_id(4), kTargetPressure, 1),
                    ContractError);

    auto short_run = records;
    short_run[7].result.snapshots.resize(20);
    CHECK_THROWS_AS(build_dataset(short_run, Scenario::by_id(4), kTargetPressure, 1),
                    ContractError);

    auto other_grid = records;
    other_grid[1].config.grid.nx = 8;
    CHECK_THROWS_AS(build_dataset(other_grid, Scenario::by_id(4), kTargetPressure, 1),
                    ContractError);

    auto other_schedule = records;
    other_schedule[2].config.schedule.t_inj = 24;
    CHECK_THROWS_AS(build_dataset(other_schedule, Scenario::by_id(4), kTargetPressure, 1),
                    ContractError);
}

TEST_CASE("dataset file round trip preserves samples, splits and statistics") {
    const Dataset d =
        build_dataset(make_records(12), Scenario::by_id(4), kTargetSaturation, 42);
    TempFile tmp("dataset-roundtrip");
    dataset_save(tmp.path, d);

    const Dataset back = dataset_load(tmp.path);
    CHECK(back.scenario.id == 4);
    CHECK(back.target_code == kTargetSaturation);
    CHECK(back.t_inj_months == 12.0);
    CHECK(back.t_total_months == 36.0);
    REQUIRE(back.train.size() == d.train.size());
    REQUIRE(back.val.size() == d.val.size());
    REQUIRE(back.test.size() == d.test.size());

    for (std::size_t c = 0; c < kNumFeatureChannels; ++c) {
        CHECK(back.normalizer.x_min[c] == d.normalizer.x_min[c]);
        CHECK(back.normalizer.x_max[c] == d.normalizer.x_max[c]);
    }
    CHECK(back.normalizer.y_min == d.normalizer.y_min);
    CHECK(back.normalizer.y_max == d.normalizer.y_max);

    const std::vector<const std::vector<Sample>*> ours = {&d.train, &d.val, &d.test};
    const std::vector<const std::vector<Sample>*> theirs = {&back.train, &back.val, &back.test};
    for (std::size_t b = 0; b < ours.size(); ++b)
        for (std::size_t i = 0; i < ours[b]->size(); ++i) {
            const Sample& a = (*ours[b])[i];
            const Sample& z = (*theirs[b])[i];
            CHECK(a.case_id == z.case_id);
            CHECK(a.t_months == z.t_months);
            CHECK(a.x.shape == z.x.shape);
            CHECK(a.x.data == z.x.data);  // bitwise f32 round trip
            CHECK(a.y.data == z.y.data);
        }
}

TEST_CASE("dataset file corruption is reported with its location") {
    const Dataset d = build_dataset(make_records(12), Scenario::by_id(1), kTargetPressure, 7);

    {
        TempFile tmp("dataset-magic");
        dataset_save(tmp.path, d);
        corrupt_byte(tmp.path, 0, 'X');
        try {
            dataset_load(tmp.path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.byte_offset == 0);
        }
    }
    {
        TempFile tmp("dataset-version");
        dataset_save(tmp.path, d);
        corrupt_byte(tmp.path, 6, 9);
        try {
            dataset_load(tmp.path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("version") != std::string::npos);
        }
    }
    {
        TempFile tmp("dataset-truncated");
        dataset_save(tmp.path, d);
        std::filesystem::resize_file(tmp.path, std::filesystem::file_size(tmp.path) - 5);
        CHECK_THROWS_AS(dataset_load(tmp.path), FormatError);
    }
    {
        TempFile tmp("dataset-trailing");
        dataset_save(tmp.path, d);
        std::ofstream f(tmp.path, std::ios::app | std::ios::binary);
        f << "zzz";
        f.close();
        CHECK_THROWS_AS(dataset_load(tmp.path), FormatError);
    }
    {
        TempFile tmp("dataset-nosidecar");
        dataset_save(tmp.path, d);
        std::filesystem::remove(dataset_sidecar_path(tmp.path));
        CHECK_THROWS_AS(dataset_load(tmp.path), FormatError);
    }
    {
        TempFile tmp("dataset-nostat");
        dataset_save(tmp.path, d);
        // Drop one normalizer statistic from the sidecar.
        std::ifstream in(dataset_sidecar_path(tmp.path));
        std::string kept, line;
        while (std::getline(in, line))
            if (line.rfind("norm.y.min=", 0) != 0) kept += line + "\n";
        in.close();
        std::ofstream out(dataset_sidecar_path(tmp.path), std::ios::trunc);
        out << kept;
        out.close();
        CHECK_THROWS_AS(dataset_load(tmp.path), FormatError);
    }
}
