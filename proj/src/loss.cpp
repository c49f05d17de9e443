#include "aefin/loss.hpp"

#include "aefin/error.hpp"
#include "aefin/spectral.hpp"

#include <cmath>

namespace aefin::loss {

LossBreakdown combine(double l_stable, double l_non_stable, double l_freq, const LossWeights& weights) {
    LossBreakdown out{l_stable, l_non_stable, l_freq, 0.0, weights};
    out.total = weights.stable * l_stable + weights.non_stable * l_non_stable + weights.freq * l_freq;
    return out;
}

TargetComponents target_decompose(const SeriesWindow& y, std::size_t k) {
    auto parts = spectral::decompose_window(y, k);
    return {std::move(parts.stable), std::move(parts.non_stable)};
}

double loss_stable(const SeriesWindow& pred, const SeriesWindow& truth, SeriesWindow* grad_pred) {
    require_same_shape(pred, truth, "loss_stable");
    const double n = static_cast<double>(pred.size());
    if (grad_pred != nullptr) *grad_pred = SeriesWindow(pred.batch(), pred.channels(), pred.length());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values()[i] - truth.values()[i];
        sum += d * d;
        if (grad_pred != nullptr) grad_pred->values()[i] = 2.0 * d / n;
    }
    return sum / n;
}

double loss_non_stable(const SeriesWindow& pred, const SeriesWindow& truth, SeriesWindow* grad_pred) {
    require_same_shape(pred, truth, "loss_non_stable");
    const double n = static_cast<double>(pred.size());
    if (grad_pred != nullptr) *grad_pred = SeriesWindow(pred.batch(), pred.channels(), pred.length());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values()[i] - truth.values()[i];
        sum += std::abs(d);
        if (grad_pred != nullptr) grad_pred->values()[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
    }
    return sum / n;
}

double loss_freq(const SeriesWindow& pred_stable, const SeriesWindow& truth_stable, SeriesWindow* grad_pred) {
    require_same_shape(pred_stable, truth_stable, "loss_freq");
    const std::size_t bins = spectral::one_sided_size(pred_stable.length());
    const double n = static_cast<double>(bins * pred_stable.rows());
    if (grad_pred != nullptr) {
        *grad_pred = SeriesWindow(pred_stable.batch(), pred_stable.channels(), pred_stable.length());
    }
    double sum = 0.0;
    std::vector<double> g_amp(bins);
    for (std::size_t b = 0; b < pred_stable.batch(); ++b) {
        for (std::size_t c = 0; c < pred_stable.channels(); ++c) {
            const auto pa = spectral::amplitude_spectrum(pred_stable.row(b, c));
            const auto ta = spectral::amplitude_spectrum(truth_stable.row(b, c));
            for (std::size_t k = 0; k < bins; ++k) {
                const double d = pa[k] - ta[k];
                sum += d * d;
                g_amp[k] = 2.0 * d / n;
            }
            if (grad_pred != nullptr) {
                const auto gx = spectral::amplitude_spectrum_backward(pred_stable.row(b, c), g_amp);
                std::copy(gx.begin(), gx.end(), grad_pred->row(b, c).begin());
            }
        }
    }
    return sum / n;
}

LossBreakdown loss_total(const model::ForecastPair& forecast, const TargetComponents& target,
                         const LossWeights& weights, LossGradients* grads) {
    SeriesWindow g_stable, g_non_stable, g_freq;
    const bool want = grads != nullptr;
    const double ls = loss_stable(forecast.stable_pred, target.stable, want ? &g_stable : nullptr);
    const double lns = loss_non_stable(forecast.nonstable_pred, target.non_stable, want ? &g_non_stable : nullptr);
    const double lf = loss_freq(forecast.stable_pred, target.stable, want ? &g_freq : nullptr);
    if (want) {
        for (std::size_t i = 0; i < g_stable.size(); ++i) {
            g_stable.values()[i] = weights.stable * g_stable.values()[i] + weights.freq * g_freq.values()[i];
        }
        for (double& v : g_non_stable.values()) v *= weights.non_stable;
        grads->stable_pred = std::move(g_stable);
        grads->nonstable_pred = std::move(g_non_stable);
    }
    return combine(ls, lns, lf, weights);
}

LossBreakdown loss_total(const model::ForecastPair& forecast, const SeriesWindow& y, std::size_t k,
                         const LossWeights& weights, LossGradients* grads) {
    return loss_total(forecast, target_decompose(y, k), weights, grads);
}

double loss_plain(const model::ForecastPair& forecast, const SeriesWindow& y, LossGradients* grads) {
    SeriesWindow g;
    const double value = loss_stable(forecast.total, y, grads != nullptr ? &g : nullptr);
    if (grads != nullptr) {
        grads->stable_pred = g;
        grads->nonstable_pred = std::move(g);
    }
    return value;
}

} // namespace aefin::loss
