#pragma once

#include "aefin/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace aefin::autodiff {

/// Named, shaped, non-owning view of one learnable array.
struct ParamView {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<double> values;
};

/// Ordered collection of parameter views. Names are unique; the order is the
/// canonical order used by gradients, optimizer state and checkpoints.
/// Views alias the owning model, so a ParamSet must not outlive it.
class ParamSet {
public:
    void add(std::string name, std::vector<std::size_t> shape, std::span<double> values);
    void add(std::string name, Matrix& m);
    void add(std::string name, std::vector<double>& v);

    std::size_t size() const { return views_.size(); }
    bool empty() const { return views_.empty(); }
    const ParamView& operator[](std::size_t i) const { return views_[i]; }
    auto begin() const { return views_.begin(); }
    auto end() const { return views_.end(); }

    std::size_t scalar_count() const;

    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& values) const;

private:
    std::vector<ParamView> views_;
};

/// One gradient array per ParamSet entry, same order and sizes.
using Gradients = std::vector<std::vector<double>>;

Gradients zero_gradients(const ParamSet& params);

/// A scalar objective over the current parameter values. When `grads` is
/// non-null it must be filled with the analytic gradient (arrays pre-sized
/// and zeroed by the caller).
using LossFunction = std::function<double(Gradients* grads)>;

Gradients grad(const LossFunction& loss, const ParamSet& params);

double relative_error(double analytic, double numeric);

struct GradCheckEntry {
    std::string name;
    std::size_t coordinates_checked = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<GradCheckEntry> entries;
};

/// Central-difference check of `loss` against its analytic gradient.
/// Arrays larger than `samples_per_array` are checked on a seeded random
/// subset of that many coordinates.
GradCheckReport finite_diff_check(const LossFunction& loss, const ParamSet& params, double h = 1e-5,
                                  std::size_t samples_per_array = 64, std::uint64_t seed = 0);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    explicit AdamState(const ParamSet& params, AdamConfig config = {});

    AdamConfig config;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t t = 0;
};

void adam_step(const ParamSet& params, const Gradients& grads, AdamState& state);

} // namespace aefin::autodiff
