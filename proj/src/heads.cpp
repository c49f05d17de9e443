#include "aefin/heads.hpp"

#include "aefin/error.hpp"
#include "dense.hpp"

#include <algorithm>
#include <cmath>

namespace aefin::heads {

namespace {

constexpr double kCubic = 0.04475;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_horizon(std::size_t horizon) {
    if (horizon == 0 || horizon % 4 != 0) {
        throw ConfigError("horizon " + std::to_string(horizon) + " must be a positive multiple of 4 for the FAN head");
    }
}

} // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(x * kInvSqrt2 + kCubic * x * x * x)); }

double gelu_derivative(double x) {
    const double u = x * kInvSqrt2 + kCubic * x * x * x;
    const double th = std::tanh(u);
    const double du = kInvSqrt2 + 3.0 * kCubic * x * x;
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

void init_uniform(Matrix& m, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : m.values()) v = dist(rng);
}

FanParams FanParams::zeros(std::size_t input_length, std::size_t horizon) {
    check_horizon(horizon);
    if (input_length == 0) throw ConfigError("FAN input length must be positive");
    return FanParams{Matrix(horizon / 4, input_length), std::vector<double>(horizon / 4, 0.0),
                     Matrix(horizon / 2, input_length), std::vector<double>(horizon / 2, 0.0)};
}

FanParams FanParams::random(std::size_t input_length, std::size_t horizon, Rng& rng) {
    FanParams p = zeros(input_length, horizon);
    init_uniform(p.w1, input_length, rng);
    init_uniform(p.w2, input_length, rng);
    return p;
}

void FanParams::register_params(autodiff::ParamSet& set, const std::string& prefix) {
    set.add(prefix + "w1", w1);
    set.add(prefix + "b1", b1);
    set.add(prefix + "w2", w2);
    set.add(prefix + "b2", b2);
}

TrendParams TrendParams::zeros(std::size_t input_length, std::size_t horizon) {
    if (input_length == 0 || horizon == 0) throw ConfigError("trend MLP lengths must be positive");
    const std::size_t concat = input_length + horizon;
    const std::size_t hidden = 3 * concat;
    return TrendParams{Matrix(concat, hidden), std::vector<double>(hidden, 0.0), Matrix(hidden, horizon),
                       std::vector<double>(horizon, 0.0)};
}

TrendParams TrendParams::random(std::size_t input_length, std::size_t horizon, Rng& rng) {
    TrendParams p = zeros(input_length, horizon);
    init_uniform(p.w1, p.w1.rows(), rng);
    init_uniform(p.w2, p.w2.rows(), rng);
    return p;
}

void TrendParams::register_params(autodiff::ParamSet& set, const std::string& prefix) {
    set.add(prefix + "w1", w1);
    set.add(prefix + "b1", b1);
    set.add(prefix + "w2", w2);
    set.add(prefix + "b2", b2);
}

Matrix fan_forward(const Matrix& x, const FanParams& p, FanCache* cache) {
    if (x.cols() != p.input_length()) {
        throw ShapeMismatch("fan_forward: input length " + std::to_string(x.cols()) + ", head expects " +
                            std::to_string(p.input_length()));
    }
    Matrix o1 = detail::matmul_transposed(x, p.w1);
    detail::add_bias(o1, p.b1);
    Matrix a2 = detail::matmul_transposed(x, p.w2);
    detail::add_bias(a2, p.b2);

    const std::size_t quarter = o1.cols();
    Matrix out(x.rows(), p.horizon());
    for (std::size_t n = 0; n < x.rows(); ++n) {
        auto dst = out.row(n);
        const auto lin = o1.row(n);
        const auto act = a2.row(n);
        for (std::size_t j = 0; j < quarter; ++j) {
            dst[j] = std::cos(lin[j]);
            dst[quarter + j] = std::sin(lin[j]);
        }
        for (std::size_t j = 0; j < act.size(); ++j) dst[2 * quarter + j] = gelu(act[j]);
    }
    if (cache != nullptr) *cache = {std::move(o1), std::move(a2)};
    return out;
}

Matrix fan_backward(const Matrix& x, const FanParams& p, const Matrix& grad_output, FanParams& grads,
                    const FanCache* cache) {
    FanCache local;
    if (cache == nullptr) {
        fan_forward(x, p, &local);
        cache = &local;
    }
    if (grad_output.rows() != x.rows() || grad_output.cols() != p.horizon()) {
        throw ShapeMismatch("fan_backward: output gradient shape mismatch");
    }
    const std::size_t quarter = p.w1.rows();
    Matrix g_lin(x.rows(), quarter);
    Matrix g_act(x.rows(), p.w2.rows());
    for (std::size_t n = 0; n < x.rows(); ++n) {
        const auto g = grad_output.row(n);
        const auto lin = cache->linear.row(n);
        const auto act = cache->activation.row(n);
        for (std::size_t j = 0; j < quarter; ++j) {
            g_lin(n, j) = -std::sin(lin[j]) * g[j] + std::cos(lin[j]) * g[quarter + j];
        }
        for (std::size_t j = 0; j < act.size(); ++j) g_act(n, j) = gelu_derivative(act[j]) * g[2 * quarter + j];
    }

    detail::accumulate_transposed_product(g_lin, x, grads.w1);
    detail::accumulate_column_sums(g_lin, grads.b1);
    detail::accumulate_transposed_product(g_act, x, grads.w2);
    detail::accumulate_column_sums(g_act, grads.b2);

    Matrix grad_x = detail::matmul(g_lin, p.w1);
    const Matrix from_act = detail::matmul(g_act, p.w2);
    for (std::size_t i = 0; i < grad_x.size(); ++i) grad_x.values()[i] += from_act.values()[i];
    return grad_x;
}

SeriesWindow fan_forward_window(const SeriesWindow& w, const FanParams& p) {
    return from_row_matrix(fan_forward(as_row_matrix(w), p), w.batch(), w.channels());
}

SeriesWindow trend_mlp(const SeriesWindow& z2, const TrendParams& p, TrendCache* cache) {
    if (z2.length() != p.concat_length()) {
        throw ShapeMismatch("trend_mlp: last axis " + std::to_string(z2.length()) + ", expected " +
                            std::to_string(p.concat_length()));
    }
    Matrix hidden = detail::matmul(as_row_matrix(z2), p.w1);
    detail::add_bias(hidden, p.b1);
    for (double& h : hidden.values()) h = std::max(h, 0.0);
    Matrix out = detail::matmul(hidden, p.w2);
    detail::add_bias(out, p.b2);
    if (cache != nullptr) cache->hidden = std::move(hidden);
    return from_row_matrix(out, z2.batch(), z2.channels());
}

SeriesWindow trend_mlp_backward(const SeriesWindow& z2, const TrendParams& p, const SeriesWindow& grad_output,
                                TrendParams& grads, const TrendCache* cache) {
    TrendCache local;
    if (cache == nullptr) {
        trend_mlp(z2, p, &local);
        cache = &local;
    }
    if (grad_output.rows() != z2.rows() || grad_output.length() != p.horizon()) {
        throw ShapeMismatch("trend_mlp_backward: output gradient shape mismatch");
    }
    const Matrix g_out = as_row_matrix(grad_output);
    const Matrix& hidden = cache->hidden;

    detail::accumulate_transposed_product(hidden, g_out, grads.w2);
    detail::accumulate_column_sums(g_out, grads.b2);

    Matrix g_hidden = detail::matmul_transposed(g_out, p.w2);
    for (std::size_t i = 0; i < g_hidden.size(); ++i) {
        if (hidden.values()[i] <= 0.0) g_hidden.values()[i] = 0.0;
    }
    const Matrix input = as_row_matrix(z2);
    detail::accumulate_transposed_product(input, g_hidden, grads.w1);
    detail::accumulate_column_sums(g_hidden, grads.b1);

    return from_row_matrix(detail::matmul_transposed(g_hidden, p.w1), z2.batch(), z2.channels());
}

SeriesWindow nonstationary_head(const SeriesWindow& x_non_stable, const SeriesWindow& x_original,
                                const FanParams& fp, const TrendParams& tp) {
    require_same_shape(x_non_stable, x_original, "nonstationary_head");
    return trend_mlp(concat_time(fan_forward_window(x_non_stable, fp), x_original), tp);
}

HeadInputGradients nonstationary_head_backward(const SeriesWindow& x_non_stable, const SeriesWindow& x_original,
                                               const FanParams& fp, const TrendParams& tp,
                                               const SeriesWindow& grad_output, FanParams& fan_grads,
                                               TrendParams& trend_grads) {
    require_same_shape(x_non_stable, x_original, "nonstationary_head_backward");
    const Matrix ns_rows = as_row_matrix(x_non_stable);
    FanCache fan_cache;
    const Matrix z1 = fan_forward(ns_rows, fp, &fan_cache);
    const SeriesWindow z2 = concat_time(from_row_matrix(z1, x_non_stable.batch(), x_non_stable.channels()), x_original);

    const SeriesWindow g_z2 = trend_mlp_backward(z2, tp, grad_output, trend_grads);

    const std::size_t horizon = fp.horizon();
    Matrix g_z1(z1.rows(), horizon);
    HeadInputGradients out{SeriesWindow(), SeriesWindow(x_original.batch(), x_original.channels(), x_original.length())};
    for (std::size_t b = 0; b < g_z2.batch(); ++b) {
        for (std::size_t c = 0; c < g_z2.channels(); ++c) {
            const auto g = g_z2.row(b, c);
            const std::size_t n = b * g_z2.channels() + c;
            std::copy(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(horizon), g_z1.row(n).begin());
            std::copy(g.begin() + static_cast<std::ptrdiff_t>(horizon), g.end(), out.original.row(b, c).begin());
        }
    }
    out.non_stable = from_row_matrix(fan_backward(ns_rows, fp, g_z1, fan_grads, &fan_cache), x_non_stable.batch(),
                                     x_non_stable.channels());
    return out;
}

} // namespace aefin::heads
