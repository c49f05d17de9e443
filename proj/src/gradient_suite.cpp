#include "aefin/gradient_suite.hpp"

#include "aefin/attention.hpp"
#include "aefin/autodiff.hpp"
#include "aefin/error.hpp"
#include "aefin/heads.hpp"
#include "aefin/loss.hpp"
#include "aefin/model.hpp"

#include <algorithm>
#include <random>

namespace aefin::gradcheck {

using autodiff::Gradients;
using autodiff::ParamSet;

namespace {

void fill_uniform(std::span<double> out, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : out) v = dist(rng);
}

SeriesWindow random_window(std::size_t b, std::size_t c, std::size_t l, std::mt19937_64& rng) {
    SeriesWindow w(b, c, l);
    fill_uniform(w.values(), rng);
    return w;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Matrix m(rows, cols);
    fill_uniform(m.values(), rng);
    return m;
}

double weighted_sum(std::span<const double> out, std::span<const double> weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * weights[i];
    return acc;
}

void copy_into(std::vector<double>& dst, std::span<const double> src) { dst.assign(src.begin(), src.end()); }

SuiteResult check(const std::string& name, const autodiff::LossFunction& loss, const ParamSet& params,
                  std::uint64_t seed) {
    const auto report = autodiff::finite_diff_check(loss, params, 1e-5, 64, seed);
    SuiteResult r{name, 0, report.max_rel_error};
    for (const auto& e : report.entries) r.coordinates += e.coordinates_checked;
    return r;
}

/// Target whose non-stable residual signs never cancel across the batch at any
/// horizon step, so the MAE term has a nonzero slope in the output biases.
SeriesWindow nondegenerate_target(const model::AefinModel& m, const SeriesWindow& x, std::mt19937_64& rng) {
    const auto pred = model::aefin_forward(m, x).nonstable_pred;
    for (;;) {
        auto y = random_window(pred.batch(), pred.channels(), pred.length(), rng);
        const auto target = loss::target_decompose(y, m.config().k);
        bool ok = true;
        for (std::size_t t = 0; t < pred.length() && ok; ++t) {
            int balance = 0;
            for (std::size_t b = 0; b < pred.batch(); ++b)
                for (std::size_t c = 0; c < pred.channels(); ++c)
                    balance += pred.row(b, c)[t] > target.non_stable.row(b, c)[t] ? 1 : -1;
            ok = balance != 0;
        }
        if (ok) return y;
    }
}

SuiteResult check_model(const SuiteSize& s, bool projection, std::uint64_t seed) {
    model::ModelConfig cfg;
    cfg.input_length = s.input_length;
    cfg.horizon = s.horizon;
    cfg.channels = s.channels;
    cfg.k = s.k;
    cfg.attention_projection = projection;
    model::AefinModel m(cfg, seed + 11);
    std::mt19937_64 rng(seed + 12);
    const auto x = random_window(s.batch, s.channels, s.input_length, rng);
    const auto y = nondegenerate_target(m, x, rng);
    const auto params = m.parameters();
    auto loss = [&](Gradients* g) {
        const auto prepared = m.prepare(x);
        const auto out = m.forward(prepared);
        loss::LossGradients lg;
        const double v = loss::loss_total(out, y, cfg.k, {}, g ? &lg : nullptr).total;
        if (g != nullptr) m.backward(prepared, lg.stable_pred, lg.nonstable_pred, *g);
        return v;
    };
    return check(projection ? "model_with_projection" : "model", loss, params, seed);
}

} // namespace

SuiteSize suite_size(std::string_view name) {
    if (name == "tiny") return {};
    if (name == "small") return {3, 3, 24, 16, 3};
    throw ConfigError("unknown gradcheck size '" + std::string(name) + "' (expected tiny or small)");
}

std::vector<SuiteResult> run_suite(const SuiteSize& s, std::uint64_t seed) {
    std::vector<SuiteResult> results;
    std::mt19937_64 rng(seed);
    const std::size_t rows = s.batch * s.channels;

    {
        std::vector<double> x(64), coeff(64);
        fill_uniform(x, rng, -3.0, 3.0);
        fill_uniform(coeff, rng);
        ParamSet params;
        params.add("x", x);
        auto loss = [&](Gradients* g) {
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                acc += coeff[i] * heads::gelu(x[i]);
                if (g != nullptr) (*g)[0][i] = coeff[i] * heads::gelu_derivative(x[i]);
            }
            return acc;
        };
        results.push_back(check("gelu", loss, params, seed));
    }

    {
        auto p = heads::FanParams::random(s.input_length, s.horizon, rng);
        Matrix x = random_matrix(rows, s.input_length, rng);
        const Matrix weights = random_matrix(rows, s.horizon, rng);
        ParamSet params;
        p.register_params(params, "fan");
        params.add("input", x);
        auto loss = [&](Gradients* g) {
            const Matrix out = heads::fan_forward(x, p);
            if (g != nullptr) {
                auto pg = heads::FanParams::zeros(s.input_length, s.horizon);
                const Matrix dx = heads::fan_backward(x, p, weights, pg);
                ParamSet gs;
                pg.register_params(gs, "fan");
                for (std::size_t i = 0; i < gs.size(); ++i) copy_into((*g)[i], gs[i].values);
                copy_into((*g)[gs.size()], dx.values());
            }
            return weighted_sum(out.values(), weights.values());
        };
        results.push_back(check("fan_head", loss, params, seed));
    }

    {
        auto p = heads::TrendParams::random(s.input_length, s.horizon, rng);
        auto z2 = random_window(s.batch, s.channels, s.input_length + s.horizon, rng);
        const auto weights = random_window(s.batch, s.channels, s.horizon, rng);
        ParamSet params;
        p.register_params(params, "trend");
        params.add("input", {z2.batch(), z2.channels(), z2.length()}, z2.values());
        auto loss = [&](Gradients* g) {
            const auto out = heads::trend_mlp(z2, p);
            if (g != nullptr) {
                auto pg = heads::TrendParams::zeros(s.input_length, s.horizon);
                const auto dz = heads::trend_mlp_backward(z2, p, weights, pg);
                ParamSet gs;
                pg.register_params(gs, "trend");
                for (std::size_t i = 0; i < gs.size(); ++i) copy_into((*g)[i], gs[i].values);
                copy_into((*g)[gs.size()], dz.values());
            }
            return weighted_sum(out.values(), weights.values());
        };
        results.push_back(check("trend_mlp", loss, params, seed));
    }

    {
        Matrix non_stable = random_matrix(s.input_length, s.channels, rng);
        Matrix stable = random_matrix(s.input_length, s.channels, rng);
        const Matrix weights = random_matrix(s.input_length, s.channels, rng);
        ParamSet params;
        params.add("non_stable", non_stable);
        params.add("stable", stable);
        auto loss = [&](Gradients* g) {
            const Matrix out = attention::cross_attention(non_stable, stable);
            if (g != nullptr) {
                const auto d = attention::cross_attention_backward(non_stable, stable, weights);
                copy_into((*g)[0], d.non_stable.values());
                copy_into((*g)[1], d.stable.values());
            }
            return weighted_sum(out.values(), weights.values());
        };
        results.push_back(check("cross_attention", loss, params, seed));
    }

    {
        auto backbone = model::LinearBackbone::random(s.input_length, s.horizon, rng);
        auto x = random_window(s.batch, s.channels, s.input_length, rng);
        const auto weights = random_window(s.batch, s.channels, s.horizon, rng);
        ParamSet params;
        backbone->register_params(params, "backbone");
        const std::size_t own = params.size();
        params.add("input", {x.batch(), x.channels(), x.length()}, x.values());
        auto loss = [&](Gradients* g) {
            const auto out = backbone->forecast(x);
            if (g != nullptr) {
                const auto dx = backbone->backward(x, weights, std::span(g->data(), own));
                copy_into((*g)[own], dx.values());
            }
            return weighted_sum(out.values(), weights.values());
        };
        results.push_back(check("linear_backbone", loss, params, seed));
    }

    using LossTerm = double (*)(const SeriesWindow&, const SeriesWindow&, SeriesWindow*);
    const std::pair<const char*, LossTerm> terms[] = {
        {"loss_stable", loss::loss_stable},
        {"loss_non_stable", loss::loss_non_stable},
        {"loss_freq", loss::loss_freq},
    };
    for (const auto& [name, term] : terms) {
        const auto truth = random_window(s.batch, s.channels, s.horizon, rng);
        auto pred = truth;
        // Offsets of at least 0.2 keep the absolute error away from its kink.
        std::uniform_real_distribution<double> offset(0.2, 1.0);
        std::bernoulli_distribution sign(0.5);
        for (double& v : pred.values()) v += sign(rng) ? offset(rng) : -offset(rng);
        ParamSet params;
        params.add("pred", {pred.batch(), pred.channels(), pred.length()}, pred.values());
        auto loss = [&, term = term](Gradients* g) {
            SeriesWindow d;
            const double v = term(pred, truth, g ? &d : nullptr);
            if (g != nullptr) copy_into((*g)[0], d.values());
            return v;
        };
        results.push_back(check(name, loss, params, seed));
    }

    results.push_back(check_model(s, false, seed));
    results.push_back(check_model(s, true, seed));
    return results;
}

} // namespace aefin::gradcheck
