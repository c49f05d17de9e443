#pragma once

#include "aefin/model.hpp"
#include "aefin/tensor.hpp"

#include <cstddef>

namespace aefin::loss {

struct LossWeights {
    double stable = 0.5;
    double non_stable = 0.2;
    double freq = 0.3;
};

struct LossBreakdown {
    double l_stable = 0.0;
    double l_non_stable = 0.0;
    double l_freq = 0.0;
    double total = 0.0;
    LossWeights weights;
};

/// total = w.stable * l_stable + w.non_stable * l_non_stable + w.freq * l_freq
LossBreakdown combine(double l_stable, double l_non_stable, double l_freq, const LossWeights& weights = {});

/// Target-side split of the horizon window; treated as labels (no gradient).
struct TargetComponents {
    SeriesWindow stable;
    SeriesWindow non_stable;
};

TargetComponents target_decompose(const SeriesWindow& y, std::size_t k);

/// Each loss optionally writes dLoss/dpred into `grad_pred` (resized to pred's shape).
double loss_stable(const SeriesWindow& pred, const SeriesWindow& truth, SeriesWindow* grad_pred = nullptr);
/// Subgradient at zero difference is 0.
double loss_non_stable(const SeriesWindow& pred, const SeriesWindow& truth, SeriesWindow* grad_pred = nullptr);
/// Mean squared difference of one-sided amplitude spectra, averaged over bins,
/// channels and batch.
double loss_freq(const SeriesWindow& pred_stable, const SeriesWindow& truth_stable,
                 SeriesWindow* grad_pred = nullptr);

struct LossGradients {
    SeriesWindow stable_pred;
    SeriesWindow nonstable_pred;
};

LossBreakdown loss_total(const model::ForecastPair& forecast, const TargetComponents& target,
                         const LossWeights& weights = {}, LossGradients* grads = nullptr);

LossBreakdown loss_total(const model::ForecastPair& forecast, const SeriesWindow& y, std::size_t k,
                         const LossWeights& weights = {}, LossGradients* grads = nullptr);

/// MSE of the total forecast; the objective of the plain-loss ablation and of
/// a standalone backbone.
double loss_plain(const model::ForecastPair& forecast, const SeriesWindow& y, LossGradients* grads = nullptr);

} // namespace aefin::loss
