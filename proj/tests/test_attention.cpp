#include "doctest.h"

#include "aefin/attention.hpp"
#include "aefin/autodiff.hpp"
#include "aefin/error.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace aefin;
using namespace aefin::attention;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    m.values() = oracle::random_vector(rows * cols, rng, -scale, scale);
    return m;
}

} // namespace

TEST_CASE("attention_scores") {
    const Matrix ones = from_rows({{1, 1, 1, 1}});
    CHECK(attention_scores(ones, ones)(0, 0) == doctest::Approx(2.0));

    const Matrix s = attention_scores(from_rows({{1}, {0}}), from_rows({{1}, {2}}));
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 1) == 2.0);
    CHECK(s(1, 0) == 0.0);
    CHECK(s(1, 1) == 0.0);

    CHECK_THROWS_AS(attention_scores(Matrix(2, 3), Matrix(2, 2)), InvalidInput);
    CHECK_THROWS_AS(attention_scores(Matrix(2, 0), Matrix(2, 0)), InvalidInput);
}

TEST_CASE("softmax_rows") {
    const Matrix w = softmax_rows(from_rows({{0, 0}, {1, 2}}));
    CHECK(w(0, 0) == doctest::Approx(0.5));
    CHECK(w(0, 1) == doctest::Approx(0.5));
    CHECK(w(1, 0) == doctest::Approx(0.26894).epsilon(1e-5));
    CHECK(w(1, 1) == doctest::Approx(0.73106).epsilon(1e-5));

    Matrix bad = from_rows({{0, NAN}});
    CHECK_THROWS_AS(softmax_rows(bad), InvalidInput);
    Matrix inf = from_rows({{0, INFINITY}});
    CHECK_THROWS_AS(softmax_rows(inf), InvalidInput);

    // Large scores stay finite thanks to max subtraction.
    const Matrix big = softmax_rows(from_rows({{1000, 1001}}));
    CHECK(big(0, 1) == doctest::Approx(0.73106).epsilon(1e-5));
}

TEST_CASE("softmax_rows: row-stochastic and shift invariant (property)") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> shift(-50.0, 50.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix scores = random_matrix(6, 6, rng, 5.0);
        const Matrix w = softmax_rows(scores);
        Matrix moved = scores;
        for (std::size_t i = 0; i < 6; ++i) {
            const double c = shift(rng);
            for (double& v : moved.row(i)) v += c;
        }
        const Matrix w2 = softmax_rows(moved);
        for (std::size_t i = 0; i < 6; ++i) {
            double sum = 0.0;
            for (double v : w.row(i)) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
        CHECK(oracle::max_abs_diff(w.values(), w2.values()) < 1e-12);
    }
}

TEST_CASE("cross_attention: worked examples") {
    const Matrix out = cross_attention(from_rows({{1}, {0}}), from_rows({{1}, {2}}));
    // Queries [1],[0] against keys [1],[2]; values are the keys themselves here.
    CHECK(out(0, 0) == doctest::Approx(1 * 0.268941 + 2 * 0.731059).epsilon(1e-5));
    CHECK(out(1, 0) == doctest::Approx(1.5));

    const Matrix hand = attend(from_rows({{1}, {0}}), from_rows({{1}, {2}}), from_rows({{10}, {20}}));
    CHECK(std::abs(hand(0, 0) - 17.311) < 1e-3);
    CHECK(std::abs(hand(1, 0) - 15.0) < 1e-3);

    const Matrix single = from_rows({{3, -1}});
    CHECK(cross_attention(from_rows({{7, 2}}), single) == single);

    const Matrix same = from_rows({{1, 2}, {1, 2}, {1, 2}});
    std::mt19937_64 rng(1);
    const Matrix o = cross_attention(random_matrix(3, 2, rng), same);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(o(i, 0) == doctest::Approx(1.0));
        CHECK(o(i, 1) == doctest::Approx(2.0));
    }

    CHECK_THROWS_AS(cross_attention(Matrix(3, 2), Matrix(2, 2)), InvalidInput);
}

TEST_CASE("cross_attention: outputs stay in the value hull (property)") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix q = random_matrix(8, 3, rng, 3.0);
        const Matrix v = random_matrix(8, 3, rng, 3.0);
        const Matrix o = cross_attention(q, v);
        for (std::size_t d = 0; d < 3; ++d) {
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t j = 0; j < 8; ++j) {
                lo = std::min(lo, v(j, d));
                hi = std::max(hi, v(j, d));
            }
            for (std::size_t i = 0; i < 8; ++i) {
                CHECK(o(i, d) >= lo - 1e-12);
                CHECK(o(i, d) <= hi + 1e-12);
            }
        }
    }
}

TEST_CASE("cross_attention_batched") {
    std::mt19937_64 rng(4);
    SeriesWindow ns(3, 2, 5), st(3, 2, 5);
    ns.values() = oracle::random_vector(ns.size(), rng);
    st.values() = oracle::random_vector(st.size(), rng);

    const SeriesWindow out = cross_attention_batched(ns, st);
    // B=1 slice equals the unbatched call on the time-major matrices.
    for (std::size_t b = 0; b < 3; ++b) {
        const Matrix direct = cross_attention(time_major(ns, b), time_major(st, b));
        CHECK(time_major(out, b) == direct);
    }

    // Permuting the batch permutes the outputs.
    const std::vector<std::size_t> perm{2, 0, 1};
    const SeriesWindow permuted = cross_attention_batched(gather_batch(ns, perm), gather_batch(st, perm));
    CHECK(permuted == gather_batch(out, perm));

    const SeriesWindow zero = cross_attention_batched(ns, SeriesWindow(3, 2, 5));
    for (double v : zero.values()) CHECK(v == 0.0);

    CHECK_THROWS_AS(cross_attention_batched(ns, SeriesWindow(3, 2, 4)), ShapeMismatch);
}

TEST_CASE("cross_attention gradients match central differences") {
    std::mt19937_64 rng(31);
    Matrix ns = random_matrix(5, 3, rng);
    Matrix st = random_matrix(5, 3, rng);
    const Matrix upstream = random_matrix(5, 3, rng);

    autodiff::ParamSet inputs;
    inputs.add("non_stable", ns);
    inputs.add("stable", st);
    const autodiff::LossFunction f = [&](autodiff::Gradients* g) {
        const Matrix o = cross_attention(ns, st);
        double total = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) total += o.values()[i] * upstream.values()[i];
        if (g != nullptr) {
            const auto grads = cross_attention_backward(ns, st, upstream);
            (*g)[0] = grads.non_stable.values();
            (*g)[1] = grads.stable.values();
        }
        return total;
    };
    CHECK(autodiff::finite_diff_check(f, inputs).max_rel_error < 1e-4);

    SeriesWindow wns(2, 2, 4), wst(2, 2, 4), up(2, 2, 4);
    wns.values() = oracle::random_vector(wns.size(), rng);
    wst.values() = oracle::random_vector(wst.size(), rng);
    up.values() = oracle::random_vector(up.size(), rng);
    autodiff::ParamSet batched;
    batched.add("non_stable", {2, 2, 4}, wns.values());
    batched.add("stable", {2, 2, 4}, wst.values());
    const autodiff::LossFunction fb = [&](autodiff::Gradients* g) {
        const SeriesWindow o = cross_attention_batched(wns, wst);
        double total = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) total += o.values()[i] * up.values()[i];
        if (g != nullptr) {
            const auto grads = cross_attention_batched_backward(wns, wst, up);
            (*g)[0] = grads.non_stable.values();
            (*g)[1] = grads.stable.values();
        }
        return total;
    };
    CHECK(autodiff::finite_diff_check(fb, batched).max_rel_error < 1e-4);
}
