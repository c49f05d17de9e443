#pragma once

// Internal dense kernels shared by the learnable layers.

#include "aefin/tensor.hpp"

#include <span>
#include <vector>

namespace aefin::detail {

/// out (N x O) = x (N x I) * w (I x O)
Matrix matmul(const Matrix& x, const Matrix& w);

/// out (N x O) = x (N x I) * w^T, with w stored O x I
Matrix matmul_transposed(const Matrix& x, const Matrix& w);

/// acc (I x O) += a^T (I x N) * b (N x O)
void accumulate_transposed_product(const Matrix& a, const Matrix& b, Matrix& acc);

inline void add_bias(Matrix& m, std::span<const double> bias) {
    for (std::size_t n = 0; n < m.rows(); ++n) {
        auto r = m.row(n);
        for (std::size_t o = 0; o < r.size(); ++o) r[o] += bias[o];
    }
}

inline void accumulate_column_sums(const Matrix& m, std::vector<double>& acc) {
    for (std::size_t n = 0; n < m.rows(); ++n) {
        const auto r = m.row(n);
        for (std::size_t o = 0; o < r.size(); ++o) acc[o] += r[o];
    }
}

} // namespace aefin::detail
