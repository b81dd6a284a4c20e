#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "gcsfno/checkpoint.hpp"
#include "gcsfno/fno.hpp"
#include "gcsfno/grad_check.hpp"
#include "oracles.hpp"

using namespace gcsfno;

namespace {

FnoArch tiny_arch() {
    FnoArch a;
    a.in_channels = 5;
    a.out_channels = 1;
    a.width = 4;
    a.modes_x = 2;
    a.modes_z = 2;
    a.fc2_width = 8;
    return a;
}

template <typename T>
Tensor<T> random_input(const FnoArch& a, std::size_t nx, std::size_t nz, std::uint64_t seed) {
    Tensor<T> x({a.in_channels, nx, nz});
    auto vals = oracle::random_field(x.size(), seed);
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = static_cast<T>(vals[i]);
    return x;
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const char* name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove(path);
    }
    ~TempFile() { std::filesystem::remove(path); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("initialization is deterministic per seed and seed-sensitive") {
    auto a = tiny_arch();
    auto p1 = fno_init<double>(a, 42);
    auto p2 = fno_init<double>(a, 42);
    auto p3 = fno_init<double>(a, 43);
    auto t1 = p1.tensors(), t2 = p2.tensors(), t3 = p3.tensors();
    bool all_same = true, any_diff = false;
    for (std::size_t i = 0; i < t1.size(); ++i) {
        all_same = all_same && (t1[i]->data == t2[i]->data);
        any_diff = any_diff || (t1[i]->data != t3[i]->data);
    }
    CHECK(all_same);
    CHECK(any_diff);
}

TEST_CASE("initialized weights respect their declared bounds") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 7);
    auto check_dense = [](const TensorD& w) {
        const double bound = std::sqrt(1.0 / static_cast<double>(w.shape[1]));
        for (double v : w.data) CHECK(std::abs(v) <= bound);
    };
    check_dense(p.fc1_w);
    check_dense(p.fc2_w);
    check_dense(p.fc3_w);
    for (const auto& l : p.layers) {
        check_dense(l.w);
        const double scale = 1.0 / static_cast<double>(l.r.shape[0] * l.r.shape[1]);
        for (double v : l.r.data) {
            CHECK(v >= 0.0);
            CHECK(v < scale);
        }
        for (double v : l.b.data) CHECK(v == 0.0);
    }
    for (double v : p.fc1_b.data) CHECK(v == 0.0);
}

TEST_CASE("a zeroed output head silences the network") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 1);
    for (double& v : p.fc3_w.data) v = 0.0;
    for (double& v : p.fc3_b.data) v = 0.0;
    auto x = random_input<double>(a, 8, 8, 2);
    auto y = fno_forward(p, x);
    REQUIRE(y.shape == std::vector<std::size_t>{1, 8, 8});
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("output shape follows the input grid") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 3);
    for (auto [nx, nz] : {std::pair<std::size_t, std::size_t>{8, 8}, {16, 8}, {8, 16}}) {
        auto y = fno_forward(p, random_input<double>(a, nx, nz, 4));
        CHECK(y.shape == std::vector<std::size_t>{1, nx, nz});
    }
}

TEST_CASE("wrong channel count is a contract violation") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 5);
    TensorD x({3, 8, 8});
    CHECK_THROWS_AS(fno_forward(p, x), ContractError);
}

TEST_CASE("non-finite parameters surface as a numerical failure") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 6);
    p.fc3_b.data[0] = std::numeric_limits<double>::infinity();
    auto x = random_input<double>(a, 8, 8, 7);
    CHECK_THROWS_AS(fno_forward(p, x), NumericError);
}

TEST_CASE("forward is pure: same inputs, same outputs, inputs untouched") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 8);
    auto x = random_input<double>(a, 8, 8, 9);
    auto x_copy = x.data;
    auto y1 = fno_forward(p, x);
    auto y2 = fno_forward(p, x);
    CHECK(y1.data == y2.data);
    CHECK(x.data == x_copy);
}

TEST_CASE("end-to-end gradients match finite differences on the tiny instance") {
    // Seed picked so every pre-activation sits at least 1.5e-4 from the
    // LeakyReLU kink; the 1e-5 difference step then never crosses it.
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 36);
    auto x = random_input<double>(a, 8, 8, 37);
    TensorD target({1, 8, 8});
    auto tv = oracle::random_field(target.size(), 38);
    target.data.assign(tv.begin(), tv.end());

    auto loss = [&]() {
        auto y = fno_forward(p, x);
        return rmse_loss(target, y).first;
    };

    FnoCache<double> cache;
    auto y = fno_forward(p, x, &cache);
    auto [l0, grad_y] = rmse_loss(target, y);
    (void)l0;
    TensorD grad_x;
    auto grads = fno_backward(p, cache, grad_y, &grad_x);

    std::vector<TensorD*> inputs{&x};
    std::vector<const TensorD*> analytic{&grad_x};
    auto pt = p.tensors();
    auto gt = grads.tensors();
    for (std::size_t i = 0; i < pt.size(); ++i) {
        inputs.push_back(pt[i]);
        analytic.push_back(gt[i]);
    }
    CHECK(grad_check(loss, inputs, analytic, 1e-5) < 1e-5);
    CHECK(grads.tensor_names() == p.tensor_names());
}

TEST_CASE("null upstream gradient produces null parameter gradients") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 13);
    auto x = random_input<double>(a, 8, 8, 14);
    FnoCache<double> cache;
    (void)fno_forward(p, x, &cache);
    TensorD zero({1, 8, 8});
    auto grads = fno_backward(p, cache, zero);
    for (const auto* t : grads.tensors())
        for (double v : t->data) CHECK(v == 0.0);
}

TEST_CASE("backward is linear in the upstream gradient") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 15);
    auto x = random_input<double>(a, 8, 8, 16);
    TensorD g({1, 8, 8});
    auto gv = oracle::random_field(g.size(), 17);
    g.data.assign(gv.begin(), gv.end());
    TensorD g2(g.shape);
    for (std::size_t i = 0; i < g.size(); ++i) g2.data[i] = 2.0 * g.data[i];

    FnoCache<double> c1, c2;
    (void)fno_forward(p, x, &c1);
    (void)fno_forward(p, x, &c2);
    auto grads1 = fno_backward(p, c1, g);
    auto grads2 = fno_backward(p, c2, g2);
    auto t1 = grads1.tensors(), t2 = grads2.tensors();
    for (std::size_t k = 0; k < t1.size(); ++k)
        for (std::size_t i = 0; i < t1[k]->size(); ++i)
            CHECK(t2[k]->data[i] == doctest::Approx(2.0 * t1[k]->data[i]).epsilon(1e-10));
}

TEST_CASE("a consumed or never-filled cache is rejected") {
    auto a = tiny_arch();
    auto p = fno_init<double>(a, 18);
    auto x = random_input<double>(a, 8, 8, 19);
    TensorD g({1, 8, 8});

    FnoCache<double> fresh;
    CHECK_THROWS_AS(fno_backward(p, fresh, g), ContractError);

    FnoCache<double> cache;
    (void)fno_forward(p, x, &cache);
    (void)fno_backward(p, cache, g);
    CHECK_THROWS_AS(fno_backward(p, cache, g), ContractError);
}

TEST_CASE("the same weights evaluate consistently across grid resolutions") {
    FnoArch a = tiny_arch();
    a.width = 8;
    a.modes_x = 3;
    a.modes_z = 3;
    auto p = fno_init<double>(a, 20);

    const std::size_t cnx = 32, cnz = 16;
    auto sample = [&](std::size_t nx, std::size_t nz) {
        Tensor<double> x({a.in_channels, nx, nz});
        for (std::size_t c = 0; c < a.in_channels; ++c)
            for (std::size_t ix = 0; ix < nx; ++ix)
                for (std::size_t iz = 0; iz < nz; ++iz) {
                    const double u = static_cast<double>(ix) / nx;
                    const double v = static_cast<double>(iz) / nz;
                    x.at3(c, ix, iz) = std::sin(2 * M_PI * (u + 0.3 * c)) *
                                       std::cos(2 * M_PI * (v - 0.2 * c)) +
                                       0.5 * std::cos(2 * M_PI * (2 * u - v));
                }
        return x;
    };

    auto y_coarse = fno_forward(p, sample(cnx, cnz));
    auto y_fine = fno_forward(p, sample(2 * cnx, 2 * cnz));

    double num = 0.0, den = 0.0;
    for (std::size_t ix = 0; ix < cnx; ++ix)
        for (std::size_t iz = 0; iz < cnz; ++iz) {
            const double c = y_coarse.at3(0, ix, iz);
            const double f = y_fine.at3(0, 2 * ix, 2 * iz);
            num += (c - f) * (c - f);
            den += c * c;
        }
    CHECK(std::sqrt(num / den) < 0.10);
}

TEST_CASE("checkpoint round trip is bitwise and preserves predictions") {
    TempFile tmp("fno_ck_roundtrip.bin");
    auto a = tiny_arch();
    Checkpoint cp;
    cp.params = fno_init<float>(a, 21);
    cp.meta.scenario_id = 3;
    cp.meta.target_code = kTargetSaturation;
    cp.meta.nx = 8;
    cp.meta.nz = 8;
    cp.meta.t_inj_months = 360.0;
    cp.meta.kv["norm.in.min.0"] = format_double(-13.71234567890123);
    cp.meta.kv["seed"] = "21";
    cp.meta.kv["history"] = "a1b2c3";

    checkpoint_save(tmp.path.string(), cp);
    auto back = checkpoint_load(tmp.path.string());

    CHECK(back.meta.scenario_id == cp.meta.scenario_id);
    CHECK(back.meta.target_code == cp.meta.target_code);
    CHECK(back.meta.nx == cp.meta.nx);
    CHECK(back.meta.nz == cp.meta.nz);
    CHECK(back.meta.t_inj_months == cp.meta.t_inj_months);
    CHECK(back.meta.kv == cp.meta.kv);
    CHECK(parse_double(back.meta.kv["norm.in.min.0"]) == -13.71234567890123);

    auto t0 = cp.params.tensors();
    auto t1 = back.params.tensors();
    REQUIRE(t0.size() == t1.size());
    for (std::size_t i = 0; i < t0.size(); ++i) CHECK(t0[i]->data == t1[i]->data);

    auto x = random_input<float>(a, 8, 8, 22);
    auto y0 = fno_forward(cp.params, x);
    auto y1 = fno_forward(back.params, x);
    CHECK(y0.data == y1.data);
}

TEST_CASE("corrupted, re-versioned, truncated, and padded files are rejected") {
    TempFile tmp("fno_ck_corrupt.bin");
    Checkpoint cp;
    cp.params = fno_init<float>(tiny_arch(), 23);
    cp.meta.nx = 8;
    cp.meta.nz = 8;
    checkpoint_save(tmp.path.string(), cp);
    const std::string good = slurp(tmp.path);

    SUBCASE("magic") {
        std::string bad = good;
        bad[0] = 'X';
        spit(tmp.path, bad);
        try {
            (void)checkpoint_load(tmp.path.string());
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(e.byte_offset == 0);
        }
    }
    SUBCASE("version") {
        std::string bad = good;
        bad[6] = 2;  // little-endian low byte of the version word
        spit(tmp.path, bad);
        try {
            (void)checkpoint_load(tmp.path.string());
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("version") != std::string::npos);
        }
    }
    SUBCASE("truncated") {
        spit(tmp.path, good.substr(0, good.size() - 10));
        CHECK_THROWS_AS((void)checkpoint_load(tmp.path.string()), FormatError);
    }
    SUBCASE("trailing bytes") {
        spit(tmp.path, good + "zz");
        CHECK_THROWS_AS((void)checkpoint_load(tmp.path.string()), FormatError);
    }
}

TEST_CASE("doubles survive the text round trip exactly") {
    for (double v : {0.0, -1.25, 3.141592653589793, 1e-300, -6894.757293168361}) {
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK_THROWS_AS(parse_double("12x"), ConfigError);
}
