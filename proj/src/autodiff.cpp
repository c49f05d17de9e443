#include "aefin/autodiff.hpp"

#include "aefin/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace aefin::autodiff {

void ParamSet::add(std::string name, std::vector<std::size_t> shape, std::span<double> values) {
    const std::size_t expected =
        std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    if (expected != values.size()) {
        throw ShapeMismatch("parameter '" + name + "' declares " + std::to_string(expected) + " values but has " +
                            std::to_string(values.size()));
    }
    for (const auto& v : views_) {
        if (v.name == name) throw InvalidInput("duplicate parameter name '" + name + "'");
    }
    views_.push_back({std::move(name), std::move(shape), values});
}

void ParamSet::add(std::string name, Matrix& m) {
    add(std::move(name), {m.rows(), m.cols()}, std::span<double>(m.values()));
}

void ParamSet::add(std::string name, std::vector<double>& v) {
    add(std::move(name), {v.size()}, std::span<double>(v));
}

std::size_t ParamSet::scalar_count() const {
    std::size_t total = 0;
    for (const auto& v : views_) total += v.values.size();
    return total;
}

std::vector<std::vector<double>> ParamSet::snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(views_.size());
    for (const auto& v : views_) out.emplace_back(v.values.begin(), v.values.end());
    return out;
}

void ParamSet::restore(const std::vector<std::vector<double>>& values) const {
    if (values.size() != views_.size()) throw ShapeMismatch("restore: parameter count mismatch");
    for (std::size_t i = 0; i < views_.size(); ++i) {
        if (values[i].size() != views_[i].values.size()) {
            throw ShapeMismatch("restore: size mismatch for '" + views_[i].name + "'");
        }
        std::copy(values[i].begin(), values[i].end(), views_[i].values.begin());
    }
}

Gradients zero_gradients(const ParamSet& params) {
    Gradients g;
    g.reserve(params.size());
    for (const auto& v : params) g.emplace_back(v.values.size(), 0.0);
    return g;
}

Gradients grad(const LossFunction& loss, const ParamSet& params) {
    Gradients g = zero_gradients(params);
    loss(&g);
    return g;
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const LossFunction& loss, const ParamSet& params, double h,
                                  std::size_t samples_per_array, std::uint64_t seed) {
    if (!(h > 0.0)) throw InvalidInput("finite_diff_check: step must be positive");

    const Gradients analytic = grad(loss, params);
    std::mt19937_64 rng(seed);
    GradCheckReport report;

    for (std::size_t p = 0; p < params.size(); ++p) {
        const auto& view = params[p];
        std::vector<std::size_t> coords(view.values.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (coords.size() > samples_per_array) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(samples_per_array);
            std::sort(coords.begin(), coords.end());
        }

        GradCheckEntry entry{view.name, coords.size(), 0.0};
        for (std::size_t i : coords) {
            const double original = view.values[i];
            view.values[i] = original + h;
            const double up = loss(nullptr);
            view.values[i] = original - h;
            const double down = loss(nullptr);
            view.values[i] = original;

            const double numeric = (up - down) / (2.0 * h);
            entry.max_rel_error = std::max(entry.max_rel_error, relative_error(analytic[p][i], numeric));
        }
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

AdamState::AdamState(const ParamSet& params, AdamConfig cfg) : config(cfg) {
    m = zero_gradients(params);
    v = zero_gradients(params);
}

void adam_step(const ParamSet& params, const Gradients& grads, AdamState& state) {
    if (grads.size() != params.size() || state.m.size() != params.size()) {
        throw ShapeMismatch("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                            std::to_string(params.size()) + " parameters");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (grads[p].size() != params[p].values.size() || state.m[p].size() != params[p].values.size()) {
            throw ShapeMismatch("adam_step: size mismatch for '" + params[p].name + "'");
        }
    }

    const auto& cfg = state.config;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);

    for (std::size_t p = 0; p < params.size(); ++p) {
        auto values = params[p].values;
        auto& m = state.m[p];
        auto& v = state.v[p];
        const auto& g = grads[p];
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            values[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

} // namespace aefin::autodiff
