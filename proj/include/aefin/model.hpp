#pragma once

#include "aefin/autodiff.hpp"
#include "aefin/heads.hpp"
#include "aefin/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace aefin::model {

/// Forecaster applied to the (fused) stable component.
class Backbone {
public:
    virtual ~Backbone() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t input_length() const = 0;
    virtual std::size_t horizon() const = 0;

    /// B x C x L_in -> B x C x L_pred.
    virtual SeriesWindow forecast(const SeriesWindow& x) const = 0;

    /// Accumulates into `grads` (one array per registered parameter, in
    /// registration order) and returns dLoss/dx. Backbones without a backward
    /// rule cannot be trained; the default throws UnsupportedOp.
    virtual SeriesWindow backward(const SeriesWindow& x, const SeriesWindow& grad_output,
                                  std::span<std::vector<double>> grads) const;

    virtual void register_params(autodiff::ParamSet& set, const std::string& prefix) = 0;
    virtual std::size_t param_count() const = 0;
    virtual std::unique_ptr<Backbone> clone() const = 0;
};

/// Per-channel affine map along time: out = x W + b, W is L_in x L_pred.
class LinearBackbone final : public Backbone {
public:
    LinearBackbone(std::size_t input_length, std::size_t horizon);

    static std::unique_ptr<LinearBackbone> random(std::size_t input_length, std::size_t horizon, heads::Rng& rng);

    std::string kind() const override { return "linear"; }
    std::size_t input_length() const override { return weight.rows(); }
    std::size_t horizon() const override { return weight.cols(); }

    SeriesWindow forecast(const SeriesWindow& x) const override;
    SeriesWindow backward(const SeriesWindow& x, const SeriesWindow& grad_output,
                          std::span<std::vector<double>> grads) const override;

    void register_params(autodiff::ParamSet& set, const std::string& prefix) override;
    std::size_t param_count() const override { return weight.size() + bias.size(); }
    std::unique_ptr<Backbone> clone() const override { return std::make_unique<LinearBackbone>(*this); }

    Matrix weight;
    std::vector<double> bias;
};

SeriesWindow linear_backbone_forecast(const LinearBackbone& p, const SeriesWindow& w);

/// Creates a backbone of a registered kind ("linear" is built in).
using BackboneFactory =
    std::function<std::unique_ptr<Backbone>(std::size_t input_length, std::size_t horizon, heads::Rng* rng)>;

void register_backbone(const std::string& kind, BackboneFactory factory);
std::unique_ptr<Backbone> make_backbone(const std::string& kind, std::size_t input_length, std::size_t horizon,
                                        heads::Rng* rng);

struct Ablation {
    bool use_cross_attention = true;
    bool use_fan = true;

    bool operator==(const Ablation&) const = default;
};

struct ModelConfig {
    std::size_t input_length = 96;
    std::size_t horizon = 96;
    std::size_t channels = 1;
    std::size_t k = 1;
    Ablation ablation;
    /// Learned C x C query/key/value projections in the fusion step.
    bool attention_projection = false;
    /// Plain backbone forecaster on the raw input: no decomposition, no heads.
    bool backbone_only = false;
    std::string backbone = "linear";

    bool operator==(const ModelConfig&) const = default;
};

void validate(const ModelConfig& config);

enum class Init { random, zeros };

struct ForecastPair {
    SeriesWindow stable_pred;
    SeriesWindow nonstable_pred;
    SeriesWindow total;
};

/// Parameter-independent inputs of a forward pass: the decomposition and,
/// when the fusion step has no learned projections, its output.
struct Prepared {
    SeriesWindow input;
    SeriesWindow stable;
    SeriesWindow non_stable;
    SeriesWindow fused;

    std::size_t batch() const { return input.batch(); }
    Prepared gather(std::span<const std::size_t> rows) const;
};

/// Intermediates of one forward pass, reused by backward on the same batch.
struct ForwardCache {
    SeriesWindow backbone_input;
    SeriesWindow z2;
    heads::FanCache fan;
    heads::TrendCache trend;
};

struct AttentionProjection {
    Matrix query;
    Matrix key;
    Matrix value;
};

class AefinModel {
public:
    AefinModel(ModelConfig config, std::uint64_t seed, Init init = Init::random);
    AefinModel(ModelConfig config, std::unique_ptr<Backbone> backbone, std::uint64_t seed, Init init = Init::random);

    AefinModel(const AefinModel& other);
    AefinModel& operator=(const AefinModel& other);
    AefinModel(AefinModel&&) noexcept = default;
    AefinModel& operator=(AefinModel&&) noexcept = default;

    const ModelConfig& config() const { return config_; }

    /// Canonical order: attention projections, FAN head, trend MLP, backbone.
    autodiff::ParamSet parameters();
    std::size_t param_count() const;

    heads::FanParams* fan() { return fan_ ? &*fan_ : nullptr; }
    const heads::FanParams* fan() const { return fan_ ? &*fan_ : nullptr; }
    heads::TrendParams& trend() { return trend_; }
    const heads::TrendParams& trend() const { return trend_; }
    Backbone& backbone() { return *backbone_; }
    const Backbone& backbone() const { return *backbone_; }
    AttentionProjection* projection() { return projection_ ? &*projection_ : nullptr; }

    Prepared prepare(const SeriesWindow& x) const;
    ForecastPair forward(const Prepared& prepared, ForwardCache* cache = nullptr) const;
    ForecastPair forward(const SeriesWindow& x) const { return forward(prepare(x)); }

    /// Accumulates dLoss/dparams into `grads` (sized per parameters()) given
    /// the loss gradients on both forecast parts. `cache` must come from
    /// forward() on the same batch with the current parameters.
    void backward(const Prepared& prepared, const SeriesWindow& grad_stable, const SeriesWindow& grad_nonstable,
                  autodiff::Gradients& grads, const ForwardCache* cache = nullptr) const;

private:
    SeriesWindow backbone_input(const Prepared& prepared) const;
    SeriesWindow head_input(const Prepared& prepared, heads::FanCache* fan_cache) const;
    void check_input(const SeriesWindow& x) const;

    ModelConfig config_;
    std::optional<AttentionProjection> projection_;
    std::optional<heads::FanParams> fan_;
    heads::TrendParams trend_;
    std::unique_ptr<Backbone> backbone_;
};

ForecastPair aefin_forward(const AefinModel& m, const SeriesWindow& x);
std::size_t param_count(const AefinModel& m);

/// Closed-form count for a configuration with the linear backbone.
std::size_t param_count(const ModelConfig& config);

} // namespace aefin::model
