#include "dense.hpp"

#include "aefin/error.hpp"

#include <string>

namespace aefin::detail {

namespace {

void require_inner(std::size_t a, std::size_t b, const char* op) {
    if (a != b) throw ShapeMismatch(std::string(op) + ": inner dimensions " + std::to_string(a) + " vs " + std::to_string(b));
}

} // namespace

// Four output rows share each weight row load.
Matrix matmul(const Matrix& x, const Matrix& w) {
    require_inner(x.cols(), w.rows(), "matmul");
    const std::size_t rows = x.rows(), inner = x.cols(), cols = w.cols();
    Matrix out(rows, cols);
    std::size_t n = 0;
    for (; n + 4 <= rows; n += 4) {
        double* d0 = out.row(n).data();
        double* d1 = out.row(n + 1).data();
        double* d2 = out.row(n + 2).data();
        double* d3 = out.row(n + 3).data();
        for (std::size_t i = 0; i < inner; ++i) {
            const double a0 = x(n, i), a1 = x(n + 1, i), a2 = x(n + 2, i), a3 = x(n + 3, i);
            const double* wr = w.row(i).data();
            for (std::size_t o = 0; o < cols; ++o) {
                const double v = wr[o];
                d0[o] += a0 * v;
                d1[o] += a1 * v;
                d2[o] += a2 * v;
                d3[o] += a3 * v;
            }
        }
    }
    for (; n < rows; ++n) {
        double* dst = out.row(n).data();
        for (std::size_t i = 0; i < inner; ++i) {
            const double a = x(n, i);
            const double* wr = w.row(i).data();
            for (std::size_t o = 0; o < cols; ++o) dst[o] += a * wr[o];
        }
    }
    return out;
}

Matrix matmul_transposed(const Matrix& x, const Matrix& w) {
    require_inner(x.cols(), w.cols(), "matmul_transposed");
    Matrix wt(w.cols(), w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < w.cols(); ++c) wt(c, r) = w(r, c);
    return matmul(x, wt);
}

void accumulate_transposed_product(const Matrix& a, const Matrix& b, Matrix& acc) {
    require_inner(a.rows(), b.rows(), "accumulate_transposed_product");
    if (acc.rows() != a.cols() || acc.cols() != b.cols()) {
        throw ShapeMismatch("accumulate_transposed_product: accumulator shape");
    }
    const std::size_t rows = a.rows(), cols = b.cols();
    std::size_t n = 0;
    for (; n + 4 <= rows; n += 4) {
        const double* b0 = b.row(n).data();
        const double* b1 = b.row(n + 1).data();
        const double* b2 = b.row(n + 2).data();
        const double* b3 = b.row(n + 3).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double s0 = a(n, i), s1 = a(n + 1, i), s2 = a(n + 2, i), s3 = a(n + 3, i);
            double* dst = acc.row(i).data();
            for (std::size_t o = 0; o < cols; ++o) dst[o] += s0 * b0[o] + s1 * b1[o] + s2 * b2[o] + s3 * b3[o];
        }
    }
    for (; n < rows; ++n) {
        const double* br = b.row(n).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double s = a(n, i);
            double* dst = acc.row(i).data();
            for (std::size_t o = 0; o < cols; ++o) dst[o] += s * br[o];
        }
    }
}

} // namespace aefin::detail
