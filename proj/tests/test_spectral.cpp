#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "gcsfno/fft.hpp"
#include "gcsfno/grad_check.hpp"
#include "gcsfno/spectral_conv.hpp"
#include "oracles.hpp"

using namespace gcsfno;

namespace {

TensorD random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    TensorD t(std::move(shape));
    auto vals = oracle::random_field(t.size(), seed);
    t.data.assign(vals.begin(), vals.end());
    return t;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("unit impulse transforms to a flat spectrum") {
    const std::size_t nx = 8, nz = 4;
    std::vector<double> field(nx * nz, 0.0);
    field[0] = 1.0;
    auto X = fft2(field.data(), nx, nz);
    for (const auto& c : X) {
        CHECK(c.real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(c.imag()) < 1e-12);
    }
}

TEST_CASE("forward/inverse round trip on a random 64x32 field") {
    const std::size_t nx = 64, nz = 32;
    auto field = oracle::random_field(nx * nz, 11);
    auto back = ifft2(fft2(field.data(), nx, nz), nx, nz);
    double worst = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        worst = std::max(worst, std::abs(back[i].real() - field[i]));
        worst = std::max(worst, std::abs(back[i].imag()));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("fft matches the direct-summation transform") {
    const std::size_t nx = 8, nz = 8;
    auto field = oracle::random_field(nx * nz, 12);
    auto fast = fft2(field.data(), nx, nz);
    auto slow = oracle::naive_dft_2d(field, nx, nz);
    double worst = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i)
        worst = std::max(worst, std::abs(fast[i] - slow[i]));
    CHECK(worst < 1e-10);

    auto back = ifft2(slow, nx, nz);
    auto slow_back = oracle::naive_idft_2d(slow, nx, nz);
    double worst_inv = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i)
        worst_inv = std::max(worst_inv, std::abs(back[i] - slow_back[i]));
    CHECK(worst_inv < 1e-10);
}

TEST_CASE("Parseval identity against direct summation") {
    const std::size_t nx = 16, nz = 8;
    auto field = oracle::random_field(nx * nz, 13);
    auto X = fft2(field.data(), nx, nz);
    double space = 0.0, freq = 0.0;
    for (double v : field) space += v * v;
    for (const auto& c : X) freq += std::norm(c);
    freq /= static_cast<double>(nx * nz);
    CHECK(std::abs(space - freq) / space < 1e-10);
}

TEST_CASE("non-power-of-two extents are rejected as configuration errors") {
    std::vector<std::complex<double>> buf(12 * 8);
    CHECK_THROWS_AS(fft_2d(buf.data(), 12, 8, false), ConfigError);
    CHECK_THROWS_AS(fft_2d(buf.data(), 16, 9, false), ConfigError);
    TensorD x({1, 12, 8});
    TensorD r({1, 1, 2, 2, 2});
    CHECK_THROWS_AS(spectral_conv_forward(x, r, 1, 1), ConfigError);
    TensorD x2({1, 8, 8});
    CHECK_THROWS_AS(spectral_conv_forward(x2, TensorD({1, 1, 10, 10, 2}), 5, 5), ConfigError);
}

TEST_CASE("bad tensor ranks are contract violations") {
    TensorD x({2, 8, 8});
    CHECK_THROWS_AS(spectral_conv_forward(x, TensorD({1, 1, 4, 4, 2}), 2, 2), ContractError);
    CHECK_THROWS_AS(spectral_conv_forward(x, TensorD({1, 2, 4, 4}), 2, 2), ContractError);
}

TEST_CASE("zero weights give identically zero output") {
    TensorD x = random_tensor({2, 8, 8}, 14);
    TensorD r({3, 2, 4, 4, 2});
    auto y = spectral_conv_forward(x, r, 2, 2);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("DC-only weight doubles a constant field, at any resolution") {
    for (std::size_t nx : {8ul, 16ul}) {
        const std::size_t nz = nx / 2;
        TensorD x({1, nx, nz});
        for (double& v : x.data) v = 3.0;
        TensorD r({1, 1, 2, 2, 2});
        r.data[0] = 2.0;  // mode (0,0), real part; all other modes zero
        auto y = spectral_conv_forward(x, r, 1, 1);
        for (double v : y.data) CHECK(v == doctest::Approx(6.0).epsilon(1e-12));
    }
}

TEST_CASE("modes above the retained band are annihilated") {
    const std::size_t nx = 16, nz = 8, mx = 2, mz = 2;
    TensorD x({1, nx, nz});
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iz = 0; iz < nz; ++iz)
            x.at3(0, ix, iz) = std::sin(2.0 * M_PI * 5.0 * ix / nx);
    // Identity-valued weights on every retained mode.
    TensorD r({1, 1, 2 * mx, 2 * mz, 2});
    for (std::size_t i = 0; i < r.size(); i += 2) r.data[i] = 1.0;
    auto y = spectral_conv_forward(x, r, mx, mz);
    for (double v : y.data) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("identity weights are a projection on band-limited fields") {
    // Build a real field supported strictly inside the retained band, where
    // every kept mode also has its conjugate partner kept. On that subspace
    // identity-valued weights act as the identity, so one and two
    // applications agree; modes on the outer edge of the band lose their
    // partner to the truncation and are excluded from the probe.
    const std::size_t nx = 16, nz = 16, mx = 3, mz = 3;
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TensorD x({1, nx, nz});
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iz = 0; iz < nz; ++iz) x.at3(0, ix, iz) = 0.0;
    for (int kx = -(int(mx) - 1); kx < int(mx); ++kx)
        for (int kz = -(int(mz) - 1); kz < int(mz); ++kz) {
            if (kx < 0 || (kx == 0 && kz < 0)) continue;  // conjugate half added below
            const double a = u(rng), b = (kx == 0 && kz == 0) ? 0.0 : u(rng);
            for (std::size_t ix = 0; ix < nx; ++ix)
                for (std::size_t iz = 0; iz < nz; ++iz) {
                    const double ang = 2.0 * M_PI * (double(kx) * ix / nx + double(kz) * iz / nz);
                    x.at3(0, ix, iz) += a * std::cos(ang) - b * std::sin(ang);
                }
        }

    TensorD r({1, 1, 2 * mx, 2 * mz, 2});
    for (std::size_t i = 0; i < r.size(); i += 2) r.data[i] = 1.0;
    auto once = spectral_conv_forward(x, r, mx, mz);
    auto twice = spectral_conv_forward(once, r, mx, mz);
    CHECK(max_abs_diff(once.data, x.data) < 1e-10);
    CHECK(max_abs_diff(twice.data, once.data) < 1e-10);
}

TEST_CASE("linear in the input and in the weights") {
    const std::size_t mx = 2, mz = 2;
    TensorD x1 = random_tensor({2, 8, 8}, 16);
    TensorD x2 = random_tensor({2, 8, 8}, 17);
    TensorD r1 = random_tensor({3, 2, 2 * mx, 2 * mz, 2}, 18);
    TensorD r2 = random_tensor({3, 2, 2 * mx, 2 * mz, 2}, 19);

    TensorD xc({2, 8, 8});
    for (std::size_t i = 0; i < xc.size(); ++i) xc.data[i] = 2.0 * x1.data[i] - 0.5 * x2.data[i];
    auto y_comb = spectral_conv_forward(xc, r1, mx, mz);
    auto y1 = spectral_conv_forward(x1, r1, mx, mz);
    auto y2 = spectral_conv_forward(x2, r1, mx, mz);
    for (std::size_t i = 0; i < y_comb.size(); ++i)
        CHECK(y_comb.data[i] ==
              doctest::Approx(2.0 * y1.data[i] - 0.5 * y2.data[i]).epsilon(1e-10));

    TensorD rc(r1.shape);
    for (std::size_t i = 0; i < rc.size(); ++i) rc.data[i] = r1.data[i] + r2.data[i];
    auto y_rsum = spectral_conv_forward(x1, rc, mx, mz);
    auto y_r1 = spectral_conv_forward(x1, r1, mx, mz);
    auto y_r2 = spectral_conv_forward(x1, r2, mx, mz);
    for (std::size_t i = 0; i < y_rsum.size(); ++i)
        CHECK(y_rsum.data[i] == doctest::Approx(y_r1.data[i] + y_r2.data[i]).epsilon(1e-10));
}

TEST_CASE("matches a direct-summation evaluation of the truncated convolution") {
    const std::size_t c_in = 2, c_out = 3, nx = 8, nz = 8, mx = 2, mz = 2;
    TensorD x = random_tensor({c_in, nx, nz}, 20);
    TensorD r = random_tensor({c_out, c_in, 2 * mx, 2 * mz, 2}, 21);
    auto y = spectral_conv_forward(x, r, mx, mz);

    // Oracle: naive DFT per channel, mix the retained bins, naive inverse.
    std::vector<std::vector<std::complex<double>>> spectra(c_in);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
        std::vector<double> chan(x.data.begin() + ci * nx * nz,
                                 x.data.begin() + (ci + 1) * nx * nz);
        spectra[ci] = oracle::naive_dft_2d(chan, nx, nz);
    }
    for (std::size_t co = 0; co < c_out; ++co) {
        std::vector<std::complex<double>> yhat(nx * nz, {0.0, 0.0});
        for (std::size_t rx = 0; rx < 2 * mx; ++rx) {
            const std::size_t kx = rx < mx ? rx : nx - 2 * mx + rx;
            for (std::size_t rz = 0; rz < 2 * mz; ++rz) {
                const std::size_t kz = rz < mz ? rz : nz - 2 * mz + rz;
                for (std::size_t ci = 0; ci < c_in; ++ci) {
                    const std::size_t wi = (((co * c_in + ci) * 2 * mx + rx) * 2 * mz + rz) * 2;
                    std::complex<double> w(r.data[wi], r.data[wi + 1]);
                    yhat[kx * nz + kz] += w * spectra[ci][kx * nz + kz];
                }
            }
        }
        auto y_ref = oracle::naive_idft_2d(yhat, nx, nz);
        for (std::size_t i = 0; i < nx * nz; ++i)
            CHECK(y.data[co * nx * nz + i] == doctest::Approx(y_ref[i].real()).epsilon(1e-10));
    }
}

TEST_CASE("conjugate-symmetrized weights leave no imaginary residue") {
    // When the weight at mode -k is the conjugate of the weight at k (and
    // unpaired edge modes carry zero weight), a real input produces an
    // exactly real result; this bounds what the real-part extraction
    // normally discards.
    const std::size_t nx = 16, nz = 8, mx = 3, mz = 2;
    TensorD r({1, 1, 2 * mx, 2 * mz, 2});
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto bin = [](std::size_t rr, std::size_t m, std::size_t n) {
        return rr < m ? rr : n - 2 * m + rr;
    };
    auto row_of_bin = [](std::size_t k, std::size_t m, std::size_t n) -> long {
        if (k < m) return long(k);
        if (k >= n - m) return long(k) - long(n) + 2 * long(m);
        return -1;  // outside the retained band
    };
    for (std::size_t rx = 0; rx < 2 * mx; ++rx)
        for (std::size_t rz = 0; rz < 2 * mz; ++rz) {
            const std::size_t kx = bin(rx, mx, nx), kz = bin(rz, mz, nz);
            const std::size_t pkx = (nx - kx) % nx, pkz = (nz - kz) % nz;
            const long prx = row_of_bin(pkx, mx, nx), prz = row_of_bin(pkz, mz, nz);
            const std::size_t wi = (rx * 2 * mz + rz) * 2;
            if (prx < 0 || prz < 0) {
                r.data[wi] = r.data[wi + 1] = 0.0;  // partner truncated away
            } else if (std::size_t(prx) * 2 * mz + std::size_t(prz) < rx * 2 * mz + rz) {
                const std::size_t pwi = (std::size_t(prx) * 2 * mz + std::size_t(prz)) * 2;
                r.data[wi] = r.data[pwi];
                r.data[wi + 1] = -r.data[pwi + 1];
            } else {
                r.data[wi] = u(rng);
                r.data[wi + 1] = (kx == pkx && kz == pkz) ? 0.0 : u(rng);
            }
        }

    auto field = oracle::random_field(nx * nz, 23);
    auto V = fft2(field.data(), nx, nz);
    std::vector<std::complex<double>> yhat(nx * nz, {0.0, 0.0});
    for (std::size_t rx = 0; rx < 2 * mx; ++rx)
        for (std::size_t rz = 0; rz < 2 * mz; ++rz) {
            const std::size_t kx = bin(rx, mx, nx), kz = bin(rz, mz, nz);
            const std::size_t wi = (rx * 2 * mz + rz) * 2;
            yhat[kx * nz + kz] =
                std::complex<double>(r.data[wi], r.data[wi + 1]) * V[kx * nz + kz];
        }
    auto y = ifft2(yhat, nx, nz);
    for (const auto& c : y) CHECK(std::abs(c.imag()) < 1e-10);
}

TEST_CASE("gradients match central finite differences") {
    const std::size_t c_in = 2, c_out = 2, nx = 8, nz = 4, mx = 2, mz = 1;
    TensorD x = random_tensor({c_in, nx, nz}, 24);
    TensorD r = random_tensor({c_out, c_in, 2 * mx, 2 * mz, 2}, 25);
    TensorD proj = random_tensor({c_out, nx, nz}, 26);

    auto loss = [&]() {
        auto y = spectral_conv_forward(x, r, mx, mz);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += proj.data[i] * y.data[i];
        return acc;
    };

    SpectralCtx<double> ctx;
    (void)spectral_conv_forward(x, r, mx, mz, &ctx);
    TensorD grad_x(x.shape), grad_r(r.shape);
    spectral_conv_backward(ctx, r, proj, &grad_x, &grad_r);

    const double err = grad_check(loss, {&x, &r}, {&grad_x, &grad_r}, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("forward does not modify its inputs") {
    TensorD x = random_tensor({1, 8, 4}, 27);
    TensorD r = random_tensor({1, 1, 2, 2, 2}, 28);
    auto x_copy = x.data;
    auto r_copy = r.data;
    (void)spectral_conv_forward(x, r, 1, 1);
    CHECK(x.data == x_copy);
    CHECK(r.data == r_copy);
}
