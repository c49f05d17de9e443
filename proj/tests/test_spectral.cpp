#include "doctest.h"

#include "aefin/error.hpp"
#include "aefin/spectral.hpp"
#include "oracles.hpp"

#include <numeric>

using namespace aefin;
using namespace aefin::spectral;

TEST_CASE("dft_real: constant and alternating signals") {
    const auto dc = dft_real(std::vector<double>{1, 1, 1, 1});
    REQUIRE(dc.bins.size() == 3);
    CHECK(std::abs(dc.bins[0] - Complex(4, 0)) < 1e-12);
    CHECK(std::abs(dc.bins[1]) < 1e-12);
    CHECK(std::abs(dc.bins[2]) < 1e-12);

    const auto alt = dft_real(std::vector<double>{1, -1, 1, -1});
    CHECK(std::abs(alt.bins[0]) < 1e-12);
    CHECK(std::abs(alt.bins[1]) < 1e-12);
    CHECK(std::abs(alt.bins[2] - Complex(4, 0)) < 1e-12);
}

TEST_CASE("dft_real: single cosine concentrates in one bin") {
    const auto s = dft_real(oracle::cosine(8, 1.0));
    for (std::size_t k = 0; k < s.bins.size(); ++k) {
        CHECK(std::abs(std::abs(s.bins[k]) - (k == 1 ? 4.0 : 0.0)) < 1e-9);
    }
}

TEST_CASE("dft_real: rejects short input") {
    CHECK_THROWS_AS(dft_real(std::vector<double>{1.0}), InvalidInput);
    CHECK_THROWS_AS(dft_real(std::vector<double>{}), InvalidInput);
}

TEST_CASE("dft_real agrees with the naive oracle for power-of-two and other lengths") {
    std::mt19937_64 rng(7);
    for (std::size_t n : {2u, 3u, 5u, 8u, 12u, 17u, 64u, 96u, 127u, 128u, 168u}) {
        const auto x = oracle::random_vector(n, rng);
        const auto fast = dft_real(x);
        const auto slow = oracle::naive_dft(x);
        REQUIRE(fast.bins.size() == slow.size());
        double err = 0.0;
        for (std::size_t k = 0; k < slow.size(); ++k) err = std::max(err, std::abs(fast.bins[k] - slow[k]));
        CHECK_MESSAGE(err < 1e-9, "L=" << n << " err=" << err);
    }
}

TEST_CASE("idft_real inverts dft_real") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {4u, 8u, 96u, 97u, 168u, 720u, 1024u}) {
        const auto x = oracle::random_vector(n, rng, -5.0, 5.0);
        CHECK(oracle::max_abs_diff(idft_real(dft_real(x)), x) < 1e-9);
    }
    const Spectrum zero{std::vector<Complex>(5), 8};
    for (double v : idft_real(zero)) CHECK(v == 0.0);

    const auto dc = idft_real(Spectrum{{Complex(4, 0), 0.0, 0.0}, 4});
    CHECK(oracle::max_abs_diff(dc, {1, 1, 1, 1}) < 1e-12);

    CHECK_THROWS_AS(idft_real(Spectrum{{Complex(1, 0)}, 4}), InvalidInput);
}

TEST_CASE("topk_dominant selection rules") {
    SUBCASE("constant signal picks DC") {
        const auto d = topk_dominant(dft_real(std::vector<double>(16, 3.0)), 1);
        CHECK(d.indices == std::vector<std::size_t>{0});
        CHECK(d.k == 1);
    }
    SUBCASE("equal magnitudes resolve to the lower bin") {
        std::vector<double> x = oracle::cosine(16, 2.0);
        const auto other = oracle::cosine(16, 5.0);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += other[i];
        CHECK(topk_dominant(dft_real(x), 1).indices == std::vector<std::size_t>{2});
        CHECK(topk_dominant(dft_real(x), 2).indices == std::vector<std::size_t>{2, 5});
    }
    SUBCASE("indices sorted and distinct") {
        std::mt19937_64 rng(3);
        const auto d = topk_dominant(dft_real(oracle::random_vector(32, rng)), 7);
        CHECK(d.indices.size() == 7);
        CHECK(std::is_sorted(d.indices.begin(), d.indices.end()));
        CHECK(std::adjacent_find(d.indices.begin(), d.indices.end()) == d.indices.end());
        CHECK(d.indices.back() <= 16);
    }
    SUBCASE("k out of range") {
        const auto s = dft_real(std::vector<double>(8, 1.0));
        CHECK_THROWS_AS(topk_dominant(s, 0), InvalidInput);
        CHECK_THROWS_AS(topk_dominant(s, 6), InvalidInput);
        CHECK_NOTHROW(topk_dominant(s, 5));
    }
}

TEST_CASE("decompose: sinusoid is entirely non-stable") {
    const auto x = oracle::cosine(16, 1.0);
    const auto d = decompose(x, 1);
    CHECK(d.dominant.indices == std::vector<std::size_t>{1});
    CHECK(oracle::max_abs_diff(d.non_stable, x) < 1e-9);
    CHECK(oracle::max_abs_diff(d.stable, std::vector<double>(16, 0.0)) < 1e-9);
}

TEST_CASE("decompose: all bins retained leaves nothing stable") {
    std::mt19937_64 rng(5);
    for (std::size_t n : {8u, 9u, 96u}) {
        const auto x = oracle::random_vector(n, rng);
        const auto d = decompose(x, one_sided_size(n));
        CHECK(oracle::max_abs_diff(d.non_stable, x) < 1e-9);
        CHECK(oracle::max_abs_diff(d.stable, std::vector<double>(n, 0.0)) < 1e-9);
    }
}

TEST_CASE("decompose: reconstruction identity and monotone residual energy (property)") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(2, 200);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = len(rng);
        const auto x = oracle::random_vector(n, rng, -10.0, 10.0);
        double previous_energy = INFINITY;
        for (std::size_t k = 1; k <= std::min<std::size_t>(one_sided_size(n), 8); ++k) {
            const auto d = decompose(x, k);
            std::vector<double> sum(n);
            for (std::size_t i = 0; i < n; ++i) sum[i] = d.stable[i] + d.non_stable[i];
            REQUIRE(oracle::max_abs_diff(sum, x) <= 1e-9);
            const double energy = std::inner_product(d.stable.begin(), d.stable.end(), d.stable.begin(), 0.0);
            CHECK(energy <= previous_energy + 1e-9);
            previous_energy = energy;
        }
    }
}

TEST_CASE("decompose_window: independent per channel") {
    SeriesWindow w(1, 2, 16);
    const auto wave = oracle::cosine(16, 3.0, 2.0);
    for (std::size_t t = 0; t < 16; ++t) {
        w(0, 0, t) = 1.5;
        w(0, 1, t) = wave[t];
    }
    const auto d = decompose_window(w, 1);
    REQUIRE(d.dominant.size() == 2);
    CHECK(d.dominant[0].indices == std::vector<std::size_t>{0});
    CHECK(d.dominant[1].indices == std::vector<std::size_t>{3});

    SeriesWindow zero(2, 3, 8);
    const auto z = decompose_window(zero, 2);
    for (double v : z.stable.values()) CHECK(v == 0.0);
    for (double v : z.non_stable.values()) CHECK(v == 0.0);

    SeriesWindow single(1, 1, 12);
    std::mt19937_64 rng(1);
    const auto x = oracle::random_vector(12, rng);
    std::copy(x.begin(), x.end(), single.values().begin());
    const auto direct = decompose(x, 2);
    const auto batched = decompose_window(single, 2);
    CHECK(batched.stable.values() == direct.stable);
    CHECK(batched.non_stable.values() == direct.non_stable);
}

TEST_CASE("amplitude_spectrum") {
    const auto a = amplitude_spectrum(std::vector<double>{1, 1, 1, 1});
    CHECK(a[0] == doctest::Approx(4.0));
    CHECK(a[1] < 1e-11);
    CHECK(a[2] < 1e-11);

    for (double v : amplitude_spectrum(std::vector<double>(10, 0.0))) CHECK(v <= 1e-12);

    // Shift invariance on a periodic signal, against the naive oracle.
    const auto base = oracle::cosine(32, 4.0, 1.0, 0.3);
    std::vector<double> shifted(32);
    for (std::size_t t = 0; t < 32; ++t) shifted[t] = base[(t + 5) % 32];
    const auto a0 = amplitude_spectrum(base);
    const auto a1 = amplitude_spectrum(shifted);
    CHECK(oracle::max_abs_diff(a0, a1) < 1e-9);
    CHECK(oracle::max_abs_diff(a0, oracle::naive_magnitudes(base)) < 1e-9);
}

TEST_CASE("amplitude_spectrum_backward matches central differences") {
    std::mt19937_64 rng(9);
    for (std::size_t n : {8u, 12u, 15u}) {
        const auto x = oracle::random_vector(n, rng);
        const auto weights = oracle::random_vector(one_sided_size(n), rng);
        auto f = [&](const std::vector<double>& v) {
            const auto a = amplitude_spectrum(v);
            return std::inner_product(a.begin(), a.end(), weights.begin(), 0.0);
        };
        const auto analytic = amplitude_spectrum_backward(x, weights);
        const auto numeric = oracle::central_gradient(f, x);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(analytic[i] - numeric[i]) / std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8}) < 1e-4);
        }
    }
}
