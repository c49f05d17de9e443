#include "doctest.h"

#include "dense.hpp"
#include "oracles.hpp"

#include <cmath>
#include <tuple>

using namespace aefin;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    Matrix m(r, c);
    m.values() = oracle::random_vector(m.size(), rng);
    return m;
}

} // namespace

// Layer-sized products, including row counts that are not multiples of the
// kernel's blocking.
TEST_CASE("dense kernels agree with naive products") {
    std::mt19937_64 rng(77);
    const std::tuple<std::size_t, std::size_t, std::size_t> shapes[] = {
        {64, 192, 576}, {64, 576, 96}, {64, 96, 24}, {7, 5, 3}, {1, 9, 2}, {66, 17, 33}};
    for (const auto& [n, i, o] : shapes) {
        const Matrix x = random_matrix(n, i, rng);
        const Matrix w = random_matrix(i, o, rng);
        const Matrix wt = random_matrix(o, i, rng);
        const Matrix b = random_matrix(n, o, rng);
        Matrix acc = random_matrix(i, o, rng);
        const Matrix acc0 = acc;

        const Matrix p = detail::matmul(x, w);
        const Matrix q = detail::matmul_transposed(x, wt);
        detail::accumulate_transposed_product(x, b, acc);

        double err = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < o; ++c) {
                double s1 = 0.0, s2 = 0.0;
                for (std::size_t k = 0; k < i; ++k) {
                    s1 += x(r, k) * w(k, c);
                    s2 += x(r, k) * wt(c, k);
                }
                err = std::max({err, std::abs(s1 - p(r, c)), std::abs(s2 - q(r, c))});
            }
        for (std::size_t r = 0; r < i; ++r)
            for (std::size_t c = 0; c < o; ++c) {
                double s = acc0(r, c);
                for (std::size_t k = 0; k < n; ++k) s += x(k, r) * b(k, c);
                err = std::max(err, std::abs(s - acc(r, c)));
            }
        CAPTURE(n);
        CAPTURE(i);
        CAPTURE(o);
        CHECK(err < 1e-12);
    }
}
