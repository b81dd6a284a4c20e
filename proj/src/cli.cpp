#include "gcsfno/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "gcsfno/archive.hpp"
#include "gcsfno/evalsuite.hpp"
#include "gcsfno/fft.hpp"

namespace gcsfno {
namespace {

namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t p = s.find(sep, start);
        out.push_back(trim(s.substr(start, p - start)));
        if (p == std::string::npos) break;
        start = p + 1;
    }
    return out;
}

double to_num(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " is not a number: '" + v + "'");
    }
}

long long to_ll(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: " + key + " is not an integer: '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: " + key + " is not a non-negative integer: '" + v + "'");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(to_u64(key, v));
}

std::vector<double> to_num_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const std::string& tok : split_on(v, ',')) out.push_back(to_num(key, tok));
    return out;
}

std::vector<std::uint64_t> to_u64_list(const std::string& key, const std::string& v) {
    std::vector<std::uint64_t> out;
    for (const std::string& tok : split_on(v, ',')) out.push_back(to_u64(key, tok));
    return out;
}

std::vector<std::size_t> to_size_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const std::string& tok : split_on(v, ',')) out.push_back(to_size(key, tok));
    return out;
}

// "50/50/0;10/90/0" -> one weight vector per ';' group.
std::vector<std::vector<double>> to_splits(const std::string& key, const std::string& v) {
    std::vector<std::vector<double>> out;
    for (const std::string& group : split_on(v, ';')) {
        std::vector<double> weights;
        for (const std::string& tok : split_on(group, '/')) weights.push_back(to_num(key, tok));
        out.push_back(std::move(weights));
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& schema() {
    auto num = [](double RunConfig::* field) {
        return [field](RunConfig& c, const std::string& k, const std::string& v) {
            c.*field = to_num(k, v);
        };
    };
    static const std::map<std::string, Setter> table = {
        {"grid.nx", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.nx = to_size(k, v); }},
        {"grid.nz", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.nz = to_size(k, v); }},
        {"grid.dx", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.dx = to_num(k, v); }},
        {"grid.dz", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.dz = to_num(k, v); }},
        {"grid.z_top", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.z_top = to_num(k, v); }},
        {"fluid.rho_w", [](RunConfig& c, const std::string& k, const std::string& v) { c.fluids.rho_w = to_num(k, v); }},
        {"fluid.rho_g", [](RunConfig& c, const std::string& k, const std::string& v) { c.fluids.rho_g = to_num(k, v); }},
        {"fluid.mu_w", [](RunConfig& c, const std::string& k, const std::string& v) { c.fluids.mu_w = to_num(k, v); }},
        {"fluid.mu_g", [](RunConfig& c, const std::string& k, const std::string& v) { c.fluids.mu_g = to_num(k, v); }},
        {"fluid.c_w", [](RunConfig& c, const std::string& k, const std::string& v) { c.fluids.c_w = to_num(k, v); }},
        {"fluid.c_g", [](RunConfig& c, const std::string& k, const std::string& v) { c.fluids.c_g = to_num(k, v); }},
        {"fluid.c_r", [](RunConfig& c, const std::string& k, const std::string& v) { c.fluids.c_r = to_num(k, v); }},
        {"fluid.g", [](RunConfig& c, const std::string& k, const std::string& v) { c.fluids.g = to_num(k, v); }},
        {"relperm.swc", [](RunConfig& c, const std::string& k, const std::string& v) { c.relperm.swc = to_num(k, v); }},
        {"relperm.sgr", [](RunConfig& c, const std::string& k, const std::string& v) { c.relperm.sgr = to_num(k, v); }},
        {"relperm.krw0", [](RunConfig& c, const std::string& k, const std::string& v) { c.relperm.krw0 = to_num(k, v); }},
        {"relperm.krg0", [](RunConfig& c, const std::string& k, const std::string& v) { c.relperm.krg0 = to_num(k, v); }},
        {"relperm.nw", [](RunConfig& c, const std::string& k, const std::string& v) { c.relperm.nw = to_num(k, v); }},
        {"relperm.ng", [](RunConfig& c, const std::string& k, const std::string& v) { c.relperm.ng = to_num(k, v); }},
        {"init.p_datum", num(&RunConfig::p_datum)},
        {"rock.corr_len_x", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.corr_len_x = to_num(k, v); }},
        {"rock.corr_len_z", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.corr_len_z = to_num(k, v); }},
        {"rock.log10_mean", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.log10_mean = to_num(k, v); }},
        {"rock.log10_std", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.log10_std = to_num(k, v); }},
        {"rock.kv_ratio", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.kv_ratio = to_num(k, v); }},
        {"rock.poro_a", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.poro_a = to_num(k, v); }},
        {"rock.poro_b", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.poro_b = to_num(k, v); }},
        {"rock.poro_k_ref", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.poro_k_ref = to_num(k, v); }},
        {"rock.poro_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.poro_min = to_num(k, v); }},
        {"rock.poro_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.rock.poro_max = to_num(k, v); }},
        {"wells.injector_ix", [](RunConfig& c, const std::string& k, const std::string& v) { c.wells.injector_ix = to_size_list(k, v); }},
        {"wells.injector_row0", [](RunConfig& c, const std::string& k, const std::string& v) { c.wells.injector_row0 = to_size(k, v); }},
        {"wells.injector_row1", [](RunConfig& c, const std::string& k, const std::string& v) { c.wells.injector_row1 = to_size(k, v); }},
        {"wells.producer_ix", [](RunConfig& c, const std::string& k, const std::string& v) { c.wells.producer_ix = to_size_list(k, v); }},
        {"wells.producer_bhp", [](RunConfig& c, const std::string& k, const std::string& v) { c.wells.producer_bhp = to_num(k, v); }},
        {"schedule.t_inj", [](RunConfig& c, const std::string& k, const std::string& v) { c.schedule.t_inj = static_cast<int>(to_ll(k, v)); }},
        {"schedule.t_total", [](RunConfig& c, const std::string& k, const std::string& v) { c.schedule.t_total = static_cast<int>(to_ll(k, v)); }},
        {"sample.perm_seeds", [](RunConfig& c, const std::string& k, const std::string& v) { c.sample.perm_seeds = to_u64_list(k, v); }},
        {"sample.volumes_m3", [](RunConfig& c, const std::string& k, const std::string& v) { c.sample.volumes_m3 = to_num_list(k, v); }},
        {"sample.splits", [](RunConfig& c, const std::string& k, const std::string& v) { c.sample.splits = to_splits(k, v); }},
        {"sample.case_budget", [](RunConfig& c, const std::string& k, const std::string& v) { c.sample.case_budget = to_size(k, v); }},
        {"sample.replicate_seed_stride", [](RunConfig& c, const std::string& k, const std::string& v) { c.sample.replicate_seed_stride = to_u64(k, v); }},
        {"data.split_seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.split_seed = to_u64(k, v); }},
        {"fno.width", [](RunConfig& c, const std::string& k, const std::string& v) { c.arch.width = to_size(k, v); }},
        {"fno.modes_x", [](RunConfig& c, const std::string& k, const std::string& v) { c.arch.modes_x = to_size(k, v); }},
        {"fno.modes_z", [](RunConfig& c, const std::string& k, const std::string& v) { c.arch.modes_z = to_size(k, v); }},
        {"fno.fc2_width", [](RunConfig& c, const std::string& k, const std::string& v) { c.arch.fc2_width = to_size(k, v); }},
        {"train.batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = to_size(k, v); }},
        {"train.max_epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.max_epochs = static_cast<int>(to_ll(k, v)); }},
        {"train.lr", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr = to_num(k, v); }},
        {"train.shuffle_seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.shuffle_seed = to_u64(k, v); }},
        {"train.init_seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.init_seed = to_u64(k, v); }},
        {"paths.out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }},
    };
    return table;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
}

/// Normalized per-injector volume fractions of one split slot.
std::vector<double> split_fractions(const RunConfig& cfg, std::size_t split_slot) {
    const std::vector<double>& w = cfg.sample.splits.at(split_slot);
    double sum = 0.0;
    for (double x : w) sum += x;
    std::vector<double> frac(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) frac[i] = w[i] / sum;
    return frac;
}

std::string target_name(std::uint32_t code) {
    return code == kTargetPressure ? "pressure" : "saturation";
}

std::string write_failed(const std::string& path) { return "cannot write " + path; }

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError(write_failed(path));
    f << text;
    if (!f) throw ConfigError(write_failed(path));
}

/// config_digest recorded in an archive sidecar, or "" when the sidecar is
/// missing or unreadable (both mean: simulate again).
std::string sidecar_digest(const std::string& sidecar) {
    std::ifstream f(sidecar);
    if (!f) return "";
    std::string line;
    while (std::getline(f, line)) {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        if (line.substr(0, eq) == "config_digest") return line.substr(eq + 1);
    }
    return "";
}

}  // namespace

OutPaths OutPaths::under(const std::string& out) {
    return {out + "/archives", out + "/datasets", out + "/models", out + "/reports"};
}

std::string archive_file(const RunConfig& cfg, const std::string& case_id) {
    return OutPaths::under(cfg.out).archives + "/" + case_id + ".gcsr";
}

std::string dataset_file(const RunConfig& cfg, int scenario_id, std::uint32_t target_code) {
    return OutPaths::under(cfg.out).datasets + "/scenario" + std::to_string(scenario_id) + "_" +
           target_name(target_code) + ".fnod";
}

std::string checkpoint_file(const RunConfig& cfg, int scenario_id, std::uint32_t target_code) {
    return OutPaths::under(cfg.out).models + "/scenario" + std::to_string(scenario_id) + "_" +
           target_name(target_code) + ".fnoc";
}

std::string history_file(const RunConfig& cfg, int scenario_id, std::uint32_t target_code) {
    return OutPaths::under(cfg.out).models + "/scenario" + std::to_string(scenario_id) + "_" +
           target_name(target_code) + "_history.csv";
}

std::uint32_t parse_target(const std::string& name) {
    if (name == "pressure") return kTargetPressure;
    if (name == "saturation") return kTargetSaturation;
    throw ConfigError("target must be 'pressure' or 'saturation', got '" + name + "'");
}

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " has no '=': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto it = schema().find(key);
        if (it == schema().end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                              "'");
        if (!seen.insert(key).second)
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                              "'");
        it->second(cfg, key, val);
    }
    return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_text(buf.str());
}

void RunConfig::validate() const {
    grid.validate();
    require(is_pow2(grid.nx) && is_pow2(grid.nz),
            "grid.nx and grid.nz must be powers of two (spectral layers), got " +
                std::to_string(grid.nx) + "x" + std::to_string(grid.nz));
    fluids.validate();
    relperm.validate();
    require(p_datum > 0.0, "init.p_datum must be positive");

    require(rock.corr_len_x > 0.0 && rock.corr_len_z > 0.0,
            "rock correlation lengths must be positive");
    require(rock.log10_std >= 0.0, "rock.log10_std must be non-negative");
    require(rock.kv_ratio > 0.0, "rock.kv_ratio must be positive");
    require(rock.poro_k_ref > 0.0, "rock.poro_k_ref must be positive");
    require(rock.poro_min > 0.0 && rock.poro_min <= rock.poro_max && rock.poro_max < 1.0,
            "porosity clamp must satisfy 0 < poro_min <= poro_max < 1");

    require(!wells.injector_ix.empty(), "wells.injector_ix needs at least one column");
    require(!wells.producer_ix.empty(), "wells.producer_ix needs at least one column");
    require(wells.injector_row0 <= wells.injector_row1 && wells.injector_row1 < grid.nz,
            "injector perforation rows must satisfy row0 <= row1 < grid.nz");
    require(wells.producer_bhp > 0.0, "wells.producer_bhp must be positive");
    std::set<std::size_t> columns;
    for (std::size_t ix : wells.injector_ix) {
        require(ix < grid.nx, "injector column out of range: " + std::to_string(ix));
        require(columns.insert(ix).second,
                "well columns must be distinct, duplicate " + std::to_string(ix));
    }
    for (std::size_t ix : wells.producer_ix) {
        require(ix < grid.nx, "producer column out of range: " + std::to_string(ix));
        require(columns.insert(ix).second,
                "well columns must be distinct, duplicate " + std::to_string(ix));
    }

    schedule.validate();
    require(schedule.snapshot_every == 1, "schedule uses monthly snapshots (snapshot_every = 1)");
    require(schedule.t_inj % 12 == 0,
            "schedule.t_inj must be a whole number of years (time-step selection)");

    require(!sample.perm_seeds.empty(), "sample.perm_seeds needs at least one seed");
    require(!sample.volumes_m3.empty(), "sample.volumes_m3 needs at least one volume");
    for (double v : sample.volumes_m3) require(v > 0.0, "sample volumes must be positive");
    require(!sample.splits.empty(), "sample.splits needs at least one split");
    for (const std::vector<double>& w : sample.splits) {
        require(w.size() == wells.injector_ix.size(),
                "each sample.splits entry needs one weight per injector (" +
                    std::to_string(wells.injector_ix.size()) + ")");
        double sum = 0.0;
        for (double x : w) {
            require(x >= 0.0, "split weights must be non-negative");
            sum += x;
        }
        require(sum > 0.0, "each split needs at least one positive weight");
    }
    require(sample.case_budget >= 10, "sample.case_budget must be at least 10 (80/10/10 split)");
    require(sample.case_budget <= 9999, "sample.case_budget must fit four digits");

    require(arch.in_channels == kNumFeatureChannels && arch.out_channels == 1,
            "the surrogate maps the five feature channels to one target channel");
    arch.validate();
    require(2 * arch.modes_x <= grid.nx && 2 * arch.modes_z <= grid.nz,
            "fno modes must satisfy 2*modes <= grid extent");
    train.validate();
}

std::vector<CaseSpec> enumerate_cases(const RunConfig& cfg) {
    cfg.validate();
    const std::size_t n_vol = cfg.sample.volumes_m3.size();
    const std::size_t n_split = cfg.sample.splits.size();
    const std::size_t product = cfg.sample.product();
    std::vector<CaseSpec> out;
    out.reserve(cfg.sample.case_budget);
    for (std::size_t i = 0; i < cfg.sample.case_budget; ++i) {
        CaseSpec s;
        s.index = i;
        s.tier = i / product;
        const std::size_t j = i % product;
        s.seed_slot = j / (n_vol * n_split);
        s.volume_slot = (j / n_split) % n_vol;
        s.split_slot = j % n_split;
        s.perm_seed = cfg.sample.perm_seeds[s.seed_slot] +
                      cfg.sample.replicate_seed_stride * static_cast<std::uint64_t>(s.tier);
        char id[16];
        std::snprintf(id, sizeof id, "case_%04zu", i);
        s.id = id;
        out.push_back(std::move(s));
    }
    return out;
}

std::map<std::string, std::string> case_params(const RunConfig& cfg, const CaseSpec& spec) {
    std::map<std::string, std::string> p;
    p["case.id"] = spec.id;
    p["case.index"] = std::to_string(spec.index);
    p["case.perm_seed"] = std::to_string(spec.perm_seed);
    p["case.seed_slot"] = std::to_string(spec.seed_slot);
    p["case.split_slot"] = std::to_string(spec.split_slot);
    p["case.tier"] = std::to_string(spec.tier);
    p["case.volume_m3"] = format_double(cfg.sample.volumes_m3.at(spec.volume_slot));
    p["case.volume_slot"] = std::to_string(spec.volume_slot);
    {
        const std::vector<double> frac = split_fractions(cfg, spec.split_slot);
        std::string s;
        for (std::size_t i = 0; i < frac.size(); ++i) {
            if (i) s += '/';
            s += format_double(frac[i]);
        }
        p["case.split"] = s;
    }
    p["grid.nx"] = std::to_string(cfg.grid.nx);
    p["grid.nz"] = std::to_string(cfg.grid.nz);
    p["grid.dx"] = format_double(cfg.grid.dx);
    p["grid.dz"] = format_double(cfg.grid.dz);
    p["grid.dy"] = format_double(cfg.grid.dy);
    p["grid.z_top"] = format_double(cfg.grid.z_top);
    p["fluid.rho_w"] = format_double(cfg.fluids.rho_w);
    p["fluid.rho_g"] = format_double(cfg.fluids.rho_g);
    p["fluid.mu_w"] = format_double(cfg.fluids.mu_w);
    p["fluid.mu_g"] = format_double(cfg.fluids.mu_g);
    p["fluid.c_w"] = format_double(cfg.fluids.c_w);
    p["fluid.c_g"] = format_double(cfg.fluids.c_g);
    p["fluid.c_r"] = format_double(cfg.fluids.c_r);
    p["fluid.g"] = format_double(cfg.fluids.g);
    p["relperm.swc"] = format_double(cfg.relperm.swc);
    p["relperm.sgr"] = format_double(cfg.relperm.sgr);
    p["relperm.krw0"] = format_double(cfg.relperm.krw0);
    p["relperm.krg0"] = format_double(cfg.relperm.krg0);
    p["relperm.nw"] = format_double(cfg.relperm.nw);
    p["relperm.ng"] = format_double(cfg.relperm.ng);
    p["init.p_datum"] = format_double(cfg.p_datum);
    p["rock.corr_len_x"] = format_double(cfg.rock.corr_len_x);
    p["rock.corr_len_z"] = format_double(cfg.rock.corr_len_z);
    p["rock.log10_mean"] = format_double(cfg.rock.log10_mean);
    p["rock.log10_std"] = format_double(cfg.rock.log10_std);
    p["rock.kv_ratio"] = format_double(cfg.rock.kv_ratio);
    p["rock.poro_a"] = format_double(cfg.rock.poro_a);
    p["rock.poro_b"] = format_double(cfg.rock.poro_b);
    p["rock.poro_k_ref"] = format_double(cfg.rock.poro_k_ref);
    p["rock.poro_min"] = format_double(cfg.rock.poro_min);
    p["rock.poro_max"] = format_double(cfg.rock.poro_max);
    p["schedule.t_inj"] = std::to_string(cfg.schedule.t_inj);
    p["schedule.t_total"] = std::to_string(cfg.schedule.t_total);
    p["wells.injector_row0"] = std::to_string(cfg.wells.injector_row0);
    p["wells.injector_row1"] = std::to_string(cfg.wells.injector_row1);
    p["wells.producer_bhp"] = format_double(cfg.wells.producer_bhp);

    const std::vector<double> frac = split_fractions(cfg, spec.split_slot);
    const double volume = cfg.sample.volumes_m3.at(spec.volume_slot);
    const double inj_seconds = static_cast<double>(cfg.schedule.t_inj) * kSecondsPerMonth;
    for (std::size_t k = 0; k < cfg.wells.injector_ix.size(); ++k) {
        if (frac[k] <= 0.0) continue;
        const std::string base = "well.inj" + std::to_string(k + 1);
        p[base + ".ix"] = std::to_string(cfg.wells.injector_ix[k]);
        p[base + ".rate_m3_s"] = format_double(volume * frac[k] / inj_seconds);
    }
    for (std::size_t k = 0; k < cfg.wells.producer_ix.size(); ++k) {
        const std::string base = "well.prod" + std::to_string(k + 1);
        p[base + ".ix"] = std::to_string(cfg.wells.producer_ix[k]);
    }
    return p;
}

std::string case_digest(const std::map<std::string, std::string>& params) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : params) {
        if (k == "config_digest") continue;
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

SimCase build_case(const RunConfig& cfg, const CaseSpec& spec) {
    SimCase c;
    c.id = spec.id;
    c.grid = cfg.grid;
    c.fluids = cfg.fluids;
    c.relperm = cfg.relperm;
    c.schedule = cfg.schedule;
    c.p_datum = cfg.p_datum;

    c.rock.perm_h = gaussian_log_perm(c.grid, cfg.rock.corr_len_x, cfg.rock.corr_len_z,
                                      cfg.rock.log10_mean, cfg.rock.log10_std, spec.perm_seed);
    c.rock.perm_v = c.rock.perm_h;
    for (double& v : c.rock.perm_v.v) v *= cfg.rock.kv_ratio;
    c.rock.poro = porosity_from_perm(c.rock.perm_h, cfg.rock.poro_a, cfg.rock.poro_b,
                                     cfg.rock.poro_k_ref, cfg.rock.poro_min, cfg.rock.poro_max);

    const std::vector<double> frac = split_fractions(cfg, spec.split_slot);
    const double volume = cfg.sample.volumes_m3.at(spec.volume_slot);
    const double inj_seconds = static_cast<double>(cfg.schedule.t_inj) * kSecondsPerMonth;
    for (std::size_t k = 0; k < cfg.wells.injector_ix.size(); ++k) {
        if (frac[k] <= 0.0) continue;
        WellSpec w;
        w.kind = WellKind::injector;
        w.name = "inj" + std::to_string(k + 1);
        for (std::size_t iz = cfg.wells.injector_row0; iz <= cfg.wells.injector_row1; ++iz)
            w.cells.push_back(c.grid.idx(cfg.wells.injector_ix[k], iz));
        w.rate_schedule = {volume * frac[k] / inj_seconds};
        c.wells.push_back(std::move(w));
    }
    for (std::size_t k = 0; k < cfg.wells.producer_ix.size(); ++k) {
        WellSpec w;
        w.kind = WellKind::producer;
        w.name = "prod" + std::to_string(k + 1);
        w.bhp = cfg.wells.producer_bhp;
        w.bhp_datum_depth = c.grid.mid_depth();
        for (std::size_t iz = 0; iz < c.grid.nz; ++iz) {
            const std::size_t cell = c.grid.idx(cfg.wells.producer_ix[k], iz);
            w.cells.push_back(cell);
            w.well_index.push_back(
                peaceman_well_index(c.rock.perm_h.v[cell], c.grid.dx, c.grid.dz, c.grid.dy));
        }
        c.wells.push_back(std::move(w));
    }

    c.tags["config_digest"] = case_digest(case_params(cfg, spec));
    c.tags["case_index"] = std::to_string(spec.index);
    return c;
}

GenerateStats cmd_generate(const RunConfig& cfg, int jobs) {
    const std::vector<CaseSpec> specs = enumerate_cases(cfg);
    fs::create_directories(OutPaths::under(cfg.out).archives);

    GenerateStats stats;
    stats.total = specs.size();
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex mu;

    auto worker = [&]() {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            const CaseSpec& spec = specs[i];
            try {
                std::map<std::string, std::string> params = case_params(cfg, spec);
                const std::string digest = case_digest(params);
                const std::string path = archive_file(cfg, spec.id);
                if (fs::exists(path) && sidecar_digest(sidecar_path(path)) == digest) {
                    std::lock_guard<std::mutex> lk(mu);
                    ++stats.skipped;
                    std::printf("%s up to date\n", spec.id.c_str());
                    continue;
                }
                const SimCase c = build_case(cfg, spec);
                const SimResult r = simulate(c);
                params["config_digest"] = digest;
                std::lock_guard<std::mutex> lk(mu);
                archive_save(path, c.grid, r, params);
                ++stats.simulated;
                std::printf("%s simulated: %zu snapshots, %.1f s\n", spec.id.c_str(),
                            r.snapshots.size(), r.wall_time_s);
            } catch (const NumericError& e) {
                std::lock_guard<std::mutex> lk(mu);
                if (!failed.exchange(true))
                    first_error = std::make_exception_ptr(
                        NumericError(spec.id + ": " + std::string(e.what())));
                return;
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!failed.exchange(true)) first_error = std::current_exception();
                return;
            }
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(specs.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    std::printf("generate: %zu cases (%zu simulated, %zu up to date)\n", stats.total,
                stats.simulated, stats.skipped);
    return stats;
}

namespace {

/// Streaming loader for dataset assembly: realizes the case from the config
/// and reads its archive, verifying the recorded digest still matches.
CaseRecord load_case_record(const RunConfig& cfg, const CaseSpec& spec) {
    const std::string path = archive_file(cfg, spec.id);
    if (!fs::exists(path))
        throw ConfigError("missing archive for " + spec.id + " (" + path +
                          "): run generate first");
    CaseRecord rec;
    rec.config = build_case(cfg, spec);
    const std::string want = rec.config.tags.at("config_digest");
    const std::string have = sidecar_digest(sidecar_path(path));
    if (have != want)
        throw ConfigError("archive for " + spec.id +
                          " was generated from a different configuration: rerun generate");
    Archive a = archive_load(path);
    if (a.nx != rec.config.grid.nx || a.nz != rec.config.grid.nz)
        throw ConfigError("archive for " + spec.id + " does not match the configured grid");
    rec.result.case_id = spec.id;
    rec.result.snapshots = std::move(a.snapshots);
    return rec;
}

Dataset obtain_dataset(const RunConfig& cfg, const Scenario& scenario, std::uint32_t target_code,
                       bool* built, std::string* path_out) {
    const std::string path = dataset_file(cfg, scenario.id, target_code);
    if (path_out) *path_out = path;
    if (fs::exists(path)) {
        Dataset d = dataset_load(path);
        if (d.scenario.id != scenario.id || d.target_code != target_code)
            throw ConfigError("dataset file " + path + " holds scenario " +
                              std::to_string(d.scenario.id) + "/" + target_name(d.target_code) +
                              "; delete it and rerun");
        if (built) *built = false;
        return d;
    }
    const std::vector<CaseSpec> specs = enumerate_cases(cfg);
    AssemblyStats stats;
    Dataset d = build_dataset(
        specs.size(),
        [&cfg, &specs](std::size_t i) { return load_case_record(cfg, specs[i]); }, scenario,
        target_code, cfg.split_seed, &stats);
    fs::create_directories(OutPaths::under(cfg.out).datasets);
    dataset_save(path, d);
    std::printf("dataset %s: %zu train / %zu val / %zu test samples (%zu filtered)\n",
                path.c_str(), d.train.size(), d.val.size(), d.test.size(), stats.filtered);
    if (built) *built = true;
    return d;
}

}  // namespace

TrainOutcome cmd_train(const RunConfig& cfg, int scenario_id, const std::string& target) {
    cfg.validate();
    const Scenario scenario = Scenario::by_id(scenario_id);
    const std::uint32_t target_code = parse_target(target);

    TrainOutcome out;
    const Dataset data = obtain_dataset(cfg, scenario, target_code, &out.dataset_built,
                                        &out.dataset_path);

    const std::uint64_t init_seed = cfg.init_seed + 100 * static_cast<std::uint64_t>(scenario_id) +
                                    10 * static_cast<std::uint64_t>(target_code);
    const auto [checkpoint, history] = train(data, cfg.arch, cfg.train, init_seed);

    fs::create_directories(OutPaths::under(cfg.out).models);
    out.checkpoint_path = checkpoint_file(cfg, scenario_id, target_code);
    out.history_path = history_file(cfg, scenario_id, target_code);
    checkpoint_save(out.checkpoint_path, checkpoint);
    write_history_csv(out.history_path, history);
    out.best_epoch = history.best_epoch;
    out.best_val_rmse_phys = history.best_val_rmse_phys;

    std::printf("trained scenario %d %s: best epoch %d, validation RMSE %s%s -> %s\n", scenario_id,
                target.c_str(), history.best_epoch, format_double(history.best_val_rmse_phys).c_str(),
                target_code == kTargetPressure ? " psia" : "", out.checkpoint_path.c_str());
    return out;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

/// Total training wall time recorded in a history CSV (the seconds column is
/// cumulative, so the last row carries the total). NaN when unavailable.
double history_total_seconds(const std::string& path) {
    std::ifstream f(path);
    if (!f) return kNaN;
    std::string line, last;
    if (!std::getline(f, line)) return kNaN;
    const std::vector<std::string> header = split_on(line, ',');
    std::size_t col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "seconds") col = i;
    if (col == header.size()) return kNaN;
    while (std::getline(f, line))
        if (!trim(line).empty()) last = line;
    if (last.empty()) return kNaN;
    const std::vector<std::string> cells = split_on(last, ',');
    if (col >= cells.size() || cells[col] == "NA") return kNaN;
    try {
        return parse_double(cells[col]);
    } catch (const std::exception&) {
        return kNaN;
    }
}

struct ModelSlot {
    bool present = false;
    Checkpoint cp;
    std::string path;
};

/// Pooled RMSE over a subset of a monthly series: sqrt of the pixel-weighted
/// mean of the squared entries.
double pooled_over(const std::vector<SeriesPoint>& series,
                   const std::function<bool(double)>& keep_month) {
    double sq = 0.0;
    std::size_t px = 0;
    for (const SeriesPoint& p : series) {
        if (!keep_month(p.t_months)) continue;
        sq += p.value * p.value * static_cast<double>(p.pixels);
        px += p.pixels;
    }
    return px == 0 ? kNaN : std::sqrt(sq / static_cast<double>(px));
}

std::string na(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

/// Everything extracted from one (scenario, target) test split in a single
/// prediction pass.
struct EvalSlice {
    std::vector<SeriesPoint> series;  // monthly RMSE, reporting units
    std::vector<double> row_rmse;
    double overall = kNaN;
    double trained_rmse = kNaN;  // months on the reduced training cadence
    double interp_rmse = kNaN;   // months the model never trained on
    double y_min = kNaN, y_max = kNaN;
    std::size_t n_samples = 0;
};

/// Per-month pixel values of one case at the monitored cells, prediction and
/// truth side by side.
struct CellSeries {
    std::vector<double> t_months;
    std::vector<std::vector<double>> pred;  // [cell][month]
    std::vector<std::vector<double>> truth;
};

struct CaseCapture {
    std::string case_id;
    std::vector<std::size_t> cells;      // Field2D flat indices
    CellSeries cell_series;              // pressure source only
    std::vector<double> pore_t, pore_pred, pore_truth;  // saturation source only
    std::vector<TensorF> cadence_inputs;                // feature tensors on the cadence
};

}  // namespace

int cmd_evaluate(const RunConfig& cfg) {
    cfg.validate();
    const OutPaths paths = OutPaths::under(cfg.out);
    const double t_inj = static_cast<double>(cfg.schedule.t_inj);
    const std::size_t nx = cfg.grid.nx, nz = cfg.grid.nz;

    // Which models exist?
    ModelSlot slots[6][2];
    std::vector<std::string> absent;
    for (int s = 1; s <= 5; ++s) {
        for (const std::uint32_t t : {kTargetPressure, kTargetSaturation}) {
            ModelSlot& slot = slots[s][t];
            slot.path = checkpoint_file(cfg, s, t);
            if (!fs::exists(slot.path)) {
                absent.push_back("scenario " + std::to_string(s) + " " + target_name(t) +
                                 " checkpoint: " + slot.path);
                continue;
            }
            slot.cp = checkpoint_load(slot.path);
            if (slot.cp.meta.nx != nx || slot.cp.meta.nz != nz)
                throw ConfigError("checkpoint " + slot.path + " was trained on a " +
                                  std::to_string(slot.cp.meta.nx) + "x" +
                                  std::to_string(slot.cp.meta.nz) +
                                  " grid; it does not match this config");
            if (slot.cp.meta.t_inj_months != t_inj)
                throw ConfigError("checkpoint " + slot.path +
                                  " uses a different injection schedule than this config");
            const double sec = history_total_seconds(history_file(cfg, s, t));
            if (std::isfinite(sec)) slot.cp.meta.kv["train.seconds"] = format_double(sec);
            slot.present = true;
        }
    }
    for (const std::string& a : absent) std::fprintf(stderr, "absent: %s\n", a.c_str());
    bool any_present = false;
    for (int s = 1; s <= 5; ++s)
        for (int t = 0; t < 2; ++t) any_present |= slots[s][t].present;
    if (!any_present) {
        std::fprintf(stderr, "evaluate: no checkpoints found under %s\n", paths.models.c_str());
        return 2;
    }

    // Pick the prediction sources for the per-case diagnostics (monitored
    // wells, pore volume, timing): a composite when both halves exist,
    // otherwise a single model covering both periods.
    const bool composite_ok =
        slots[1][kTargetPressure].present && slots[3][kTargetPressure].present;
    int pressure_source = composite_ok             ? 0
                          : slots[5][kTargetPressure].present ? 5
                          : slots[4][kTargetPressure].present ? 4
                                                              : -1;
    int saturation_source = slots[5][kTargetSaturation].present   ? 5
                            : slots[4][kTargetSaturation].present ? 4
                                                                  : -1;

    const std::vector<int> cadence_months =
        select_time_steps(cfg.schedule.t_inj, cfg.schedule.t_total);
    const std::set<double> cadence(cadence_months.begin(), cadence_months.end());

    EvalSlice slices[6][2];
    bool sliced[6][2] = {};
    CaseCapture capture;             // shared first test case
    CaseCapture sat_capture;         // saturation-side inputs for timing/pore
    ScenarioReport table;

    for (int s = 1; s <= 5; ++s) {
        const Scenario scenario = Scenario::by_id(s);
        const bool p_here = slots[s][kTargetPressure].present;
        const bool g_here = slots[s][kTargetSaturation].present;
        if (!p_here && !g_here) {
            table.rows.push_back(
                evaluate_scenario_row(s, nullptr, nullptr, nullptr, nullptr, t_inj));
            continue;
        }

        // Test splits for whichever targets have a model.
        std::vector<Sample> tests[2];
        for (const std::uint32_t t : {kTargetPressure, kTargetSaturation}) {
            if (!slots[s][t].present) continue;
            Dataset d = obtain_dataset(cfg, scenario, t, nullptr, nullptr);
            tests[t] = std::move(d.test);
            if (tests[t].empty())
                throw ContractError("dataset for scenario " + std::to_string(s) +
                                    " has no test samples");
            if (capture.case_id.empty()) capture.case_id = tests[t].front().case_id;
        }

        table.rows.push_back(evaluate_scenario_row(
            s, p_here ? &slots[s][kTargetPressure].cp : nullptr, p_here ? &tests[0] : nullptr,
            g_here ? &slots[s][kTargetSaturation].cp : nullptr, g_here ? &tests[1] : nullptr,
            t_inj));

        for (const std::uint32_t t : {kTargetPressure, kTargetSaturation}) {
            if (!slots[s][t].present) continue;
            const std::vector<Sample>& test = tests[t];
            const Checkpoint& cp = slots[s][t].cp;
            std::vector<TensorF> preds;
            preds.reserve(test.size());
            for (const Sample& smp : test) preds.push_back(model_predict(cp, smp.x));

            EvalSlice& sl = slices[s][t];
            const double unit = report_unit_divisor(t);
            sl.series = rmse_vs_time(test, preds, unit);
            sl.row_rmse = rmse_per_row(test, preds, unit);
            sl.overall = pooled_rmse(test, preds, unit);
            sl.trained_rmse =
                pooled_over(sl.series, [&](double m) { return cadence.count(m) > 0; });
            sl.interp_rmse =
                pooled_over(sl.series, [&](double m) { return cadence.count(m) == 0; });
            sl.n_samples = test.size();
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (const Sample& smp : test)
                for (const float v : smp.y.data) {
                    lo = std::min(lo, static_cast<double>(v));
                    hi = std::max(hi, static_cast<double>(v));
                }
            sl.y_min = lo;
            sl.y_max = hi;
            sliced[s][t] = true;

            // Per-case extraction from the shared first test case.
            const bool p_take = t == kTargetPressure &&
                                (pressure_source == s || (pressure_source == 0 && (s == 1 || s == 3)));
            const bool g_take = t == kTargetSaturation && saturation_source == s;
            if (!p_take && !g_take) continue;
            if (capture.cells.empty()) {
                // Cells and porosity come from the case definition itself.
                const std::vector<CaseSpec> specs = enumerate_cases(cfg);
                for (const CaseSpec& spec : specs)
                    if (spec.id == capture.case_id) {
                        const SimCase cc = build_case(cfg, spec);
                        capture.cells = monitored_cells(cc);
                        break;
                    }
                if (capture.cells.empty())
                    throw ContractError("test case " + capture.case_id +
                                        " is not part of the configured enumeration");
                capture.cell_series.pred.resize(capture.cells.size());
                capture.cell_series.truth.resize(capture.cells.size());
            }
            Field2D poro;
            if (g_take) {
                for (const CaseSpec& spec : enumerate_cases(cfg))
                    if (spec.id == capture.case_id) poro = build_case(cfg, spec).rock.poro;
            }
            for (std::size_t i = 0; i < test.size(); ++i) {
                const Sample& smp = test[i];
                if (smp.case_id != capture.case_id) continue;
                CaseCapture& side = p_take ? capture : sat_capture;
                if (cadence.count(smp.t_months)) side.cadence_inputs.push_back(smp.x);
                if (p_take) {
                    capture.cell_series.t_months.push_back(smp.t_months);
                    for (std::size_t c = 0; c < capture.cells.size(); ++c) {
                        const std::size_t f = capture.cells[c];
                        const std::size_t px = (f % nx) * nz + f / nx;  // tensor is z-fastest
                        capture.cell_series.pred[c].push_back(preds[i].data[px] / kPascalPerPsia);
                        capture.cell_series.truth[c].push_back(smp.y.data[px] / kPascalPerPsia);
                    }
                }
                if (g_take) {
                    Field2D sg_pred(nx, nz), sg_truth(nx, nz);
                    for (std::size_t ix = 0; ix < nx; ++ix)
                        for (std::size_t iz = 0; iz < nz; ++iz) {
                            sg_pred.at(ix, iz) = preds[i].data[ix * nz + iz];
                            sg_truth.at(ix, iz) = smp.y.data[ix * nz + iz];
                        }
                    sat_capture.pore_t.push_back(smp.t_months);
                    sat_capture.pore_pred.push_back(co2_pore_volume(sg_pred, poro));
                    sat_capture.pore_truth.push_back(co2_pore_volume(sg_truth, poro));
                }
            }
        }
    }

    fs::create_directories(paths.reports);
    write_file(paths.reports + "/scenario_table.csv", scenario_report_csv(table));

    // Per-model series and summaries.
    {
        std::ostringstream overall, adequacy;
        overall << "scenario,target,overall_rmse,n_test_samples\n";
        adequacy << "scenario,target,overall_rmse,trained_months_rmse,interpolated_months_rmse,"
                    "interp_ratio,target_range\n";
        for (int s = 1; s <= 5; ++s)
            for (const std::uint32_t t : {kTargetPressure, kTargetSaturation}) {
                if (!sliced[s][t]) continue;
                const EvalSlice& sl = slices[s][t];
                const std::string stem = paths.reports + "/scenario" + std::to_string(s) + "_" +
                                         target_name(t);
                write_file(stem + "_rmse_vs_time.csv", series_csv(sl.series));
                write_file(stem + "_rmse_vs_time.txt", series_two_column(sl.series));
                write_file(stem + "_rmse_per_row.csv", row_rmse_csv(sl.row_rmse));
                overall << s << ',' << target_name(t) << ',' << na(sl.overall) << ','
                        << sl.n_samples << '\n';
                const double range = (sl.y_max - sl.y_min) / report_unit_divisor(t);
                const double ratio = sl.interp_rmse / sl.trained_rmse;
                adequacy << s << ',' << target_name(t) << ',' << na(sl.overall) << ','
                         << na(sl.trained_rmse) << ',' << na(sl.interp_rmse) << ',' << na(ratio)
                         << ',' << na(range) << '\n';
            }
        write_file(paths.reports + "/overall_rmse.csv", overall.str());
        write_file(paths.reports + "/adequacy.csv", adequacy.str());
    }

    // Composite pressure model: scenario 1 serves the injection months,
    // scenario 3 the post-injection months, so its monthly series is the
    // concatenation of the two constituents' series.
    if (composite_ok && sliced[1][kTargetPressure] && sliced[3][kTargetPressure]) {
        CompositeModel cm{slots[1][kTargetPressure].cp, slots[3][kTargetPressure].cp, t_inj};
        cm.validate();
        const EvalSlice& inj = slices[1][kTargetPressure];
        const EvalSlice& post = slices[3][kTargetPressure];
        std::vector<SeriesPoint> series = inj.series;
        series.insert(series.end(), post.series.begin(), post.series.end());
        for (std::size_t i = 1; i < series.size(); ++i)
            if (!(series[i - 1].t_months < series[i].t_months))
                throw ContractError("composite constituents overlap in time");
        write_file(paths.reports + "/composite_pressure_rmse_vs_time.csv", series_csv(series));
        write_file(paths.reports + "/composite_pressure_rmse_vs_time.txt",
                   series_two_column(series));

        std::size_t inj_px = 0, post_px = 0;
        for (const SeriesPoint& p : inj.series) inj_px += p.pixels;
        for (const SeriesPoint& p : post.series) post_px += p.pixels;
        std::vector<double> rows(inj.row_rmse.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const double sq = inj.row_rmse[r] * inj.row_rmse[r] * static_cast<double>(inj_px) +
                              post.row_rmse[r] * post.row_rmse[r] * static_cast<double>(post_px);
            rows[r] = std::sqrt(sq / static_cast<double>(inj_px + post_px));
        }
        write_file(paths.reports + "/composite_pressure_rmse_per_row.csv", row_rmse_csv(rows));

        const double overall = pooled_over(series, [](double) { return true; });
        std::ostringstream os;
        os << "overall_rmse_psia,injection_rmse_psia,post_rmse_psia,injection_pixels,post_pixels\n"
           << na(overall) << ',' << na(inj.overall) << ',' << na(post.overall) << ',' << inj_px
           << ',' << post_px << '\n';
        write_file(paths.reports + "/composite_pressure.csv", os.str());
    } else if (!composite_ok) {
        std::fprintf(stderr,
                     "composite pressure report skipped: needs scenario 1 and scenario 3 "
                     "pressure checkpoints\n");
    }

    // Pressure-RMSE discontinuity at shut-in: the step between the last
    // injection month and the first post-injection month. Scenario 3 starts
    // at shut-in, so its step is measured across the composite boundary
    // (scenario 1 serving the injection side).
    {
        auto series_value = [&](int s, double month) -> double {
            if (!sliced[s][kTargetPressure]) return kNaN;
            for (const SeriesPoint& p : slices[s][kTargetPressure].series)
                if (p.t_months == month) return p.value;
            return kNaN;
        };
        std::ostringstream os;
        os << "scenario,basis,rmse_before_psia,rmse_after_psia,jump_psia\n";
        const double s1_before = series_value(1, t_inj);
        const double s3_after = series_value(3, t_inj + 1.0);
        const double j3 = std::abs(s3_after - s1_before);
        os << "3,composite_boundary," << na(s1_before) << ',' << na(s3_after) << ',' << na(j3)
           << '\n';
        for (const int s : {4, 5}) {
            const double before = series_value(s, t_inj);
            const double after = series_value(s, t_inj + 1.0);
            os << s << ",direct," << na(before) << ',' << na(after) << ','
               << na(std::abs(after - before)) << '\n';
        }
        write_file(paths.reports + "/shutin_jump.csv", os.str());
    }

    // Monitored-cell pressure series and errors at the first test case.
    if (!capture.cell_series.t_months.empty()) {
        const std::size_t n_wells = capture.cells.size();
        // Well names follow the case definition's well order.
        std::vector<std::string> names;
        for (const CaseSpec& spec : enumerate_cases(cfg))
            if (spec.id == capture.case_id)
                for (const WellSpec& w : build_case(cfg, spec).wells) names.push_back(w.name);
        std::ostringstream err, ser;
        err << "case,well,cell_ix,cell_iz,series_error_percent\n";
        for (std::size_t c = 0; c < n_wells; ++c) {
            const WellSeriesError e =
                well_series_error(capture.cell_series.pred[c], capture.cell_series.truth[c]);
            err << capture.case_id << ',' << names.at(c) << ',' << capture.cells[c] % nx << ','
                << capture.cells[c] / nx << ',' << (e.defined ? format_double(e.percent) : "NA")
                << '\n';
        }
        ser << "t_months";
        for (std::size_t c = 0; c < n_wells; ++c)
            ser << ',' << names.at(c) << "_truth_psia," << names.at(c) << "_pred_psia";
        ser << '\n';
        for (std::size_t i = 0; i < capture.cell_series.t_months.size(); ++i) {
            ser << format_double(capture.cell_series.t_months[i]);
            for (std::size_t c = 0; c < n_wells; ++c)
                ser << ',' << format_double(capture.cell_series.truth[c][i]) << ','
                    << format_double(capture.cell_series.pred[c][i]);
            ser << '\n';
        }
        write_file(paths.reports + "/wells_pressure.csv", err.str());
        write_file(paths.reports + "/wells_pressure_series.csv", ser.str());
    } else {
        std::fprintf(stderr, "monitored-well report skipped: no pressure model covers the run\n");
    }

    // CO2 pore-volume indicator at the first test case.
    if (!sat_capture.pore_t.empty()) {
        std::ostringstream os;
        os << "t_months,predicted,truth\n";
        for (std::size_t i = 0; i < sat_capture.pore_t.size(); ++i)
            os << format_double(sat_capture.pore_t[i]) << ','
               << format_double(sat_capture.pore_pred[i]) << ','
               << format_double(sat_capture.pore_truth[i]) << '\n';
        write_file(paths.reports + "/pore_volume.csv", os.str());
    } else {
        std::fprintf(stderr,
                     "pore-volume report skipped: no both-period saturation model present\n");
    }

    // Timing: the surrogate answers the reduced-cadence queries spanning the
    // whole horizon; the simulator must march through every month of the
    // same case. Each inference timing takes the best of three runs to damp
    // scheduler noise.
    if (pressure_source >= 0 && saturation_source >= 0 && !capture.cadence_inputs.empty() &&
        !sat_capture.cadence_inputs.empty()) {
        auto best_of3 = [](const std::function<double()>& run) {
            double best = run();
            for (int i = 0; i < 2; ++i) best = std::min(best, run());
            return best;
        };
        TimingReport tr;
        if (pressure_source == 0) {
            std::vector<TensorF> inj_in, post_in;
            for (std::size_t i = 0; i < capture.cadence_inputs.size(); ++i) {
                // Inputs were captured scenario 1 first, then scenario 3.
                (capture.cell_series.t_months.empty() ? inj_in : inj_in) = inj_in;  // no-op
            }
            // Split by the month of each cadence sample via the rate/time
            // channel is ambiguous; recapture by count: scenario 1
            // contributed the injection-period cadence months, scenario 3
            // the rest, in that order.
            std::size_t n_inj = 0;
            for (const int m : cadence_months)
                if (static_cast<double>(m) <= t_inj) ++n_inj;
            if (n_inj > capture.cadence_inputs.size())
                throw ContractError("cadence capture is incomplete");
            inj_in.assign(capture.cadence_inputs.begin(), capture.cadence_inputs.begin() + n_inj);
            post_in.assign(capture.cadence_inputs.begin() + n_inj, capture.cadence_inputs.end());
            tr.pressure_seconds = best_of3([&] {
                return time_inference_seconds(slots[1][kTargetPressure].cp, inj_in) +
                       time_inference_seconds(slots[3][kTargetPressure].cp, post_in);
            });
        } else {
            tr.pressure_seconds = best_of3([&] {
                return time_inference_seconds(slots[pressure_source][kTargetPressure].cp,
                                              capture.cadence_inputs);
            });
        }
        tr.saturation_seconds = best_of3([&] {
            return time_inference_seconds(slots[saturation_source][kTargetSaturation].cp,
                                          sat_capture.cadence_inputs);
        });
        for (const CaseSpec& spec : enumerate_cases(cfg))
            if (spec.id == capture.case_id)
                tr.sim_seconds = time_simulation_seconds({build_case(cfg, spec)});
        write_file(paths.reports + "/timing.csv", timing_csv(tr));
        std::printf("timing: surrogate %.3f s vs simulator %.1f s (speedup %.1fx)\n",
                    tr.pressure_seconds + tr.saturation_seconds, tr.sim_seconds, tr.speedup());
    } else {
        std::fprintf(stderr, "timing report skipped: needs both-period pressure and saturation "
                             "prediction sources\n");
    }

    std::printf("evaluate: reports written to %s\n", paths.reports.c_str());
    return 0;
}

}  // namespace gcsfno
