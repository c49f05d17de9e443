#pragma once

#include "aefin/autodiff.hpp"
#include "aefin/tensor.hpp"

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace aefin::heads {

using Rng = std::mt19937_64;

/// 0.5 x (1 + tanh(x / sqrt(2) + 0.04475 x^3)). Note the inner term differs
/// from the common sqrt(2/pi) (x + 0.044715 x^3) approximation.
double gelu(double x);
double gelu_derivative(double x);

/// Fourier analysis head. w1 is (L_pred/4) x L_in, w2 is (L_pred/2) x L_in.
struct FanParams {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;

    /// Throws ConfigError unless horizon % 4 == 0.
    static FanParams zeros(std::size_t input_length, std::size_t horizon);
    static FanParams random(std::size_t input_length, std::size_t horizon, Rng& rng);

    std::size_t input_length() const { return w1.cols(); }
    std::size_t horizon() const { return 4 * w1.rows(); }
    std::size_t count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

    void register_params(autodiff::ParamSet& set, const std::string& prefix);
};

/// Two-layer trend MLP over the concatenated (L_pred + L_in) sequence.
/// w1 is P x 3P and w2 is 3P x L_pred, with P = L_pred + L_in.
struct TrendParams {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;

    static TrendParams zeros(std::size_t input_length, std::size_t horizon);
    static TrendParams random(std::size_t input_length, std::size_t horizon, Rng& rng);

    std::size_t concat_length() const { return w1.rows(); }
    std::size_t horizon() const { return w2.cols(); }
    std::size_t count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

    void register_params(autodiff::ParamSet& set, const std::string& prefix);
};

/// Fills `m` uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void init_uniform(Matrix& m, std::size_t fan_in, Rng& rng);

struct FanCache {
    Matrix linear;     // O1 = x W1^T + b1
    Matrix activation; // W2 x + b2, before GELU
};

/// Rows of x are independent series of length L_in; output rows have length
/// L_pred laid out as [cos(O1) | sin(O1) | GELU(O2)].
Matrix fan_forward(const Matrix& x, const FanParams& p, FanCache* cache = nullptr);

/// Accumulates parameter gradients into `grads` and returns dLoss/dx.
Matrix fan_backward(const Matrix& x, const FanParams& p, const Matrix& grad_output, FanParams& grads,
                    const FanCache* cache = nullptr);

/// Applies the head to every (batch, channel) row with shared parameters.
SeriesWindow fan_forward_window(const SeriesWindow& w, const FanParams& p);

struct TrendCache {
    Matrix hidden; // post-ReLU
};

SeriesWindow trend_mlp(const SeriesWindow& z2, const TrendParams& p, TrendCache* cache = nullptr);

/// Accumulates parameter gradients and returns dLoss/dz2.
SeriesWindow trend_mlp_backward(const SeriesWindow& z2, const TrendParams& p, const SeriesWindow& grad_output,
                                TrendParams& grads, const TrendCache* cache = nullptr);

/// trend_mlp(concat(fan_forward_window(x_non_stable), x_original)).
SeriesWindow nonstationary_head(const SeriesWindow& x_non_stable, const SeriesWindow& x_original,
                                const FanParams& fp, const TrendParams& tp);

struct HeadInputGradients {
    SeriesWindow non_stable;
    SeriesWindow original;
};

HeadInputGradients nonstationary_head_backward(const SeriesWindow& x_non_stable, const SeriesWindow& x_original,
                                               const FanParams& fp, const TrendParams& tp,
                                               const SeriesWindow& grad_output, FanParams& fan_grads,
                                               TrendParams& trend_grads);

} // namespace aefin::heads
