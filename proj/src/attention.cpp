#include "aefin/attention.hpp"

#include "aefin/error.hpp"

#include <algorithm>
#include <cmath>

namespace aefin::attention {

namespace {

void require_rows_compatible(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InvalidInput(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                           std::to_string(b.cols()));
    }
}

} // namespace

Matrix attention_scores(const Matrix& queries, const Matrix& keys) {
    if (queries.cols() != keys.cols()) {
        throw InvalidInput("attention_scores: query dim " + std::to_string(queries.cols()) + " vs key dim " +
                           std::to_string(keys.cols()));
    }
    if (queries.cols() == 0) throw InvalidInput("attention_scores: feature dimension must be >= 1");

    const double scale = 1.0 / std::sqrt(static_cast<double>(queries.cols()));
    Matrix scores(queries.rows(), keys.rows());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const auto q = queries.row(i);
        for (std::size_t j = 0; j < keys.rows(); ++j) {
            const auto k = keys.row(j);
            double dot = 0.0;
            for (std::size_t d = 0; d < q.size(); ++d) dot += q[d] * k[d];
            scores(i, j) = dot * scale;
        }
    }
    return scores;
}

Matrix softmax_rows(const Matrix& scores) {
    Matrix out(scores.rows(), scores.cols());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const auto in = scores.row(i);
        auto dst = out.row(i);
        double peak = -INFINITY;
        for (double s : in) {
            if (!std::isfinite(s)) throw InvalidInput("softmax_rows: non-finite score in row " + std::to_string(i));
            peak = std::max(peak, s);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            dst[j] = std::exp(in[j] - peak);
            total += dst[j];
        }
        for (double& v : dst) v /= total;
    }
    return out;
}

Matrix attend(const Matrix& queries, const Matrix& keys, const Matrix& values, AttentionMatrices* matrices) {
    if (keys.rows() != values.rows()) {
        throw InvalidInput("attend: " + std::to_string(keys.rows()) + " keys vs " + std::to_string(values.rows()) +
                           " values");
    }
    Matrix scores = attention_scores(queries, keys);
    Matrix weights = softmax_rows(scores);

    Matrix out(queries.rows(), values.cols());
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t j = 0; j < values.rows(); ++j) {
            const double a = weights(i, j);
            const auto v = values.row(j);
            for (std::size_t d = 0; d < o.size(); ++d) o[d] += a * v[d];
        }
    }
    if (matrices != nullptr) *matrices = {std::move(scores), std::move(weights)};
    return out;
}

AttendGradients attend_backward(const Matrix& queries, const Matrix& keys, const Matrix& values,
                                const Matrix& grad_output) {
    if (grad_output.rows() != queries.rows() || grad_output.cols() != values.cols()) {
        throw InvalidInput("attend_backward: output gradient shape mismatch");
    }
    const Matrix weights = softmax_rows(attention_scores(queries, keys));
    const std::size_t nq = queries.rows();
    const std::size_t nk = keys.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(queries.cols()));

    AttendGradients g{Matrix(nq, queries.cols()), Matrix(nk, keys.cols()), Matrix(nk, values.cols())};

    // dV = A^T dO ; dA = dO V^T ; dS = A * (dA - rowsum(dA * A))
    Matrix grad_scores(nq, nk);
    for (std::size_t i = 0; i < nq; ++i) {
        const auto go = grad_output.row(i);
        double weighted = 0.0;
        for (std::size_t j = 0; j < nk; ++j) {
            const auto v = values.row(j);
            auto gv = g.values.row(j);
            double da = 0.0;
            for (std::size_t d = 0; d < go.size(); ++d) {
                gv[d] += weights(i, j) * go[d];
                da += go[d] * v[d];
            }
            grad_scores(i, j) = da;
            weighted += da * weights(i, j);
        }
        for (std::size_t j = 0; j < nk; ++j) {
            grad_scores(i, j) = weights(i, j) * (grad_scores(i, j) - weighted) * scale;
        }
    }
    for (std::size_t i = 0; i < nq; ++i) {
        auto gq = g.queries.row(i);
        const auto q = queries.row(i);
        for (std::size_t j = 0; j < nk; ++j) {
            const double s = grad_scores(i, j);
            const auto k = keys.row(j);
            auto gk = g.keys.row(j);
            for (std::size_t d = 0; d < q.size(); ++d) {
                gq[d] += s * k[d];
                gk[d] += s * q[d];
            }
        }
    }
    return g;
}

Matrix cross_attention(const Matrix& non_stable, const Matrix& stable) {
    require_rows_compatible(non_stable, stable, "cross_attention");
    return attend(non_stable, stable, stable);
}

CrossAttentionGradients cross_attention_backward(const Matrix& non_stable, const Matrix& stable,
                                                 const Matrix& grad_output) {
    require_rows_compatible(non_stable, stable, "cross_attention_backward");
    AttendGradients g = attend_backward(non_stable, stable, stable, grad_output);
    // Stable rows feed both keys and values.
    for (std::size_t i = 0; i < g.keys.size(); ++i) g.keys.values()[i] += g.values.values()[i];
    return {std::move(g.queries), std::move(g.keys)};
}

Matrix time_major(const SeriesWindow& w, std::size_t b) {
    Matrix m(w.length(), w.channels());
    for (std::size_t c = 0; c < w.channels(); ++c) {
        const auto r = w.row(b, c);
        for (std::size_t t = 0; t < w.length(); ++t) m(t, c) = r[t];
    }
    return m;
}

void store_time_major(const Matrix& m, SeriesWindow& w, std::size_t b) {
    for (std::size_t c = 0; c < w.channels(); ++c) {
        auto r = w.row(b, c);
        for (std::size_t t = 0; t < w.length(); ++t) r[t] = m(t, c);
    }
}

SeriesWindow cross_attention_batched(const SeriesWindow& non_stable, const SeriesWindow& stable) {
    require_same_shape(non_stable, stable, "cross_attention_batched");
    SeriesWindow out(stable.batch(), stable.channels(), stable.length());
    for (std::size_t b = 0; b < stable.batch(); ++b) {
        store_time_major(cross_attention(time_major(non_stable, b), time_major(stable, b)), out, b);
    }
    return out;
}

BatchedCrossAttentionGradients cross_attention_batched_backward(const SeriesWindow& non_stable,
                                                                const SeriesWindow& stable,
                                                                const SeriesWindow& grad_output) {
    require_same_shape(non_stable, stable, "cross_attention_batched_backward");
    require_same_shape(stable, grad_output, "cross_attention_batched_backward");
    BatchedCrossAttentionGradients out{SeriesWindow(stable.batch(), stable.channels(), stable.length()),
                                       SeriesWindow(stable.batch(), stable.channels(), stable.length())};
    for (std::size_t b = 0; b < stable.batch(); ++b) {
        const auto g = cross_attention_backward(time_major(non_stable, b), time_major(stable, b),
                                                time_major(grad_output, b));
        store_time_major(g.non_stable, out.non_stable, b);
        store_time_major(g.stable, out.stable, b);
    }
    return out;
}

} // namespace aefin::attention
