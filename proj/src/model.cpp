#include "aefin/model.hpp"

#include "aefin/attention.hpp"
#include "aefin/error.hpp"
#include "aefin/spectral.hpp"
#include "dense.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace aefin::model {

namespace {

SeriesWindow gather_rows(const SeriesWindow& w, std::span<const std::size_t> rows) {
    if (w.size() == 0) return {};
    return gather_batch(w, rows);
}

void add_into(std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

struct BackboneRegistry {
    std::mutex mutex;
    std::map<std::string, BackboneFactory> factories;
};

BackboneRegistry& registry() {
    static BackboneRegistry r;
    static const bool seeded = [] {
        r.factories["linear"] = [](std::size_t input_length, std::size_t horizon,
                                   heads::Rng* rng) -> std::unique_ptr<Backbone> {
            if (rng != nullptr) return LinearBackbone::random(input_length, horizon, *rng);
            return std::make_unique<LinearBackbone>(input_length, horizon);
        };
        return true;
    }();
    (void)seeded;
    return r;
}

Matrix projected(const Matrix& rows, const Matrix& weight) { return detail::matmul(rows, weight); }

} // namespace

SeriesWindow Backbone::backward(const SeriesWindow&, const SeriesWindow&, std::span<std::vector<double>>) const {
    throw UnsupportedOp("backbone '" + kind() + "' has no backward rule");
}

LinearBackbone::LinearBackbone(std::size_t input_length, std::size_t horizon)
    : weight(input_length, horizon), bias(horizon, 0.0) {
    if (input_length == 0 || horizon == 0) throw ConfigError("linear backbone lengths must be positive");
}

std::unique_ptr<LinearBackbone> LinearBackbone::random(std::size_t input_length, std::size_t horizon,
                                                       heads::Rng& rng) {
    auto b = std::make_unique<LinearBackbone>(input_length, horizon);
    heads::init_uniform(b->weight, input_length, rng);
    return b;
}

SeriesWindow LinearBackbone::forecast(const SeriesWindow& x) const {
    if (x.length() != input_length()) {
        throw ShapeMismatch("linear backbone: input length " + std::to_string(x.length()) + ", expected " +
                            std::to_string(input_length()));
    }
    Matrix out = detail::matmul(as_row_matrix(x), weight);
    detail::add_bias(out, bias);
    return from_row_matrix(out, x.batch(), x.channels());
}

SeriesWindow LinearBackbone::backward(const SeriesWindow& x, const SeriesWindow& grad_output,
                                      std::span<std::vector<double>> grads) const {
    if (grads.size() != 2) throw ShapeMismatch("linear backbone expects 2 gradient arrays");
    if (grad_output.rows() != x.rows() || grad_output.length() != horizon()) {
        throw ShapeMismatch("linear backbone: output gradient " + grad_output.shape_string());
    }
    const Matrix g = as_row_matrix(grad_output);
    Matrix g_weight(weight.rows(), weight.cols());
    detail::accumulate_transposed_product(as_row_matrix(x), g, g_weight);
    add_into(grads[0], g_weight.values());
    detail::accumulate_column_sums(g, grads[1]);
    return from_row_matrix(detail::matmul_transposed(g, weight), x.batch(), x.channels());
}

void LinearBackbone::register_params(autodiff::ParamSet& set, const std::string& prefix) {
    set.add(prefix + "weight", weight);
    set.add(prefix + "bias", bias);
}

SeriesWindow linear_backbone_forecast(const LinearBackbone& p, const SeriesWindow& w) { return p.forecast(w); }

void register_backbone(const std::string& kind, BackboneFactory factory) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.factories[kind] = std::move(factory);
}

std::unique_ptr<Backbone> make_backbone(const std::string& kind, std::size_t input_length, std::size_t horizon,
                                        heads::Rng* rng) {
    auto& r = registry();
    BackboneFactory factory;
    {
        std::lock_guard lock(r.mutex);
        auto it = r.factories.find(kind);
        if (it == r.factories.end()) throw ConfigError("unknown backbone '" + kind + "'");
        factory = it->second;
    }
    return factory(input_length, horizon, rng);
}

void validate(const ModelConfig& config) {
    if (config.input_length < 2) throw ConfigError("input_length must be >= 2");
    if (config.horizon == 0) throw ConfigError("horizon must be positive");
    if (config.channels == 0) throw ConfigError("channels must be positive");
    if (config.backbone_only) return;
    if (config.k < 1 || config.k > spectral::one_sided_size(config.input_length)) {
        throw ConfigError("k=" + std::to_string(config.k) + " invalid for input length " +
                          std::to_string(config.input_length));
    }
    if (config.ablation.use_fan && config.horizon % 4 != 0) {
        throw ConfigError("horizon " + std::to_string(config.horizon) + " must be divisible by 4 when the FAN head is enabled");
    }
}

Prepared Prepared::gather(std::span<const std::size_t> rows) const {
    return Prepared{gather_rows(input, rows), gather_rows(stable, rows), gather_rows(non_stable, rows),
                    gather_rows(fused, rows)};
}

AefinModel::AefinModel(ModelConfig config, std::uint64_t seed, Init init)
    : AefinModel(config, nullptr, seed, init) {}

AefinModel::AefinModel(ModelConfig config, std::unique_ptr<Backbone> backbone, std::uint64_t seed, Init init)
    : config_(std::move(config)) {
    validate(config_);
    heads::Rng rng(seed);
    heads::Rng* rng_ptr = init == Init::random ? &rng : nullptr;
    const std::size_t li = config_.input_length;
    const std::size_t lp = config_.horizon;

    if (!config_.backbone_only) {
        if (config_.ablation.use_cross_attention && config_.attention_projection) {
            const std::size_t c = config_.channels;
            AttentionProjection proj{Matrix(c, c), Matrix(c, c), Matrix(c, c)};
            if (init == Init::random) {
                for (std::size_t i = 0; i < c; ++i) proj.query(i, i) = proj.key(i, i) = proj.value(i, i) = 1.0;
            }
            projection_ = std::move(proj);
        }
        if (config_.ablation.use_fan) {
            fan_ = rng_ptr ? heads::FanParams::random(li, lp, rng) : heads::FanParams::zeros(li, lp);
        }
        trend_ = rng_ptr ? heads::TrendParams::random(li, lp, rng) : heads::TrendParams::zeros(li, lp);
    }

    if (backbone) {
        if (backbone->input_length() != li || backbone->horizon() != lp) {
            throw ShapeMismatch("backbone maps " + std::to_string(backbone->input_length()) + " -> " +
                                std::to_string(backbone->horizon()) + ", model needs " + std::to_string(li) + " -> " +
                                std::to_string(lp));
        }
        config_.backbone = backbone->kind();
        backbone_ = std::move(backbone);
    } else {
        backbone_ = make_backbone(config_.backbone, li, lp, rng_ptr);
    }
}

AefinModel::AefinModel(const AefinModel& other)
    : config_(other.config_),
      projection_(other.projection_),
      fan_(other.fan_),
      trend_(other.trend_),
      backbone_(other.backbone_->clone()) {}

AefinModel& AefinModel::operator=(const AefinModel& other) {
    if (this != &other) {
        AefinModel copy(other);
        *this = std::move(copy);
    }
    return *this;
}

autodiff::ParamSet AefinModel::parameters() {
    autodiff::ParamSet set;
    if (projection_) {
        set.add("attention.query", projection_->query);
        set.add("attention.key", projection_->key);
        set.add("attention.value", projection_->value);
    }
    if (fan_) fan_->register_params(set, "fan.");
    if (!config_.backbone_only) trend_.register_params(set, "trend.");
    backbone_->register_params(set, "backbone.");
    return set;
}

std::size_t AefinModel::param_count() const {
    std::size_t total = backbone_->param_count();
    if (projection_) total += projection_->query.size() + projection_->key.size() + projection_->value.size();
    if (fan_) total += fan_->count();
    if (!config_.backbone_only) total += trend_.count();
    return total;
}

void AefinModel::check_input(const SeriesWindow& x) const {
    if (x.channels() != config_.channels || x.length() != config_.input_length) {
        throw ShapeMismatch("model expects Bx" + std::to_string(config_.channels) + "x" +
                            std::to_string(config_.input_length) + " input, got " + x.shape_string());
    }
}

Prepared AefinModel::prepare(const SeriesWindow& x) const {
    check_input(x);
    Prepared p;
    p.input = x;
    if (config_.backbone_only) return p;
    auto parts = spectral::decompose_window(x, config_.k);
    p.stable = std::move(parts.stable);
    p.non_stable = std::move(parts.non_stable);
    if (config_.ablation.use_cross_attention && !projection_) {
        p.fused = attention::cross_attention_batched(p.non_stable, p.stable);
    }
    return p;
}

SeriesWindow AefinModel::backbone_input(const Prepared& prepared) const {
    if (config_.backbone_only) return prepared.input;
    if (!config_.ablation.use_cross_attention) return prepared.stable;
    if (!projection_) return prepared.fused;

    SeriesWindow out(prepared.batch(), config_.channels, config_.input_length);
    for (std::size_t b = 0; b < prepared.batch(); ++b) {
        const Matrix ns = attention::time_major(prepared.non_stable, b);
        const Matrix st = attention::time_major(prepared.stable, b);
        attention::store_time_major(attention::attend(projected(ns, projection_->query), projected(st, projection_->key),
                                                      projected(st, projection_->value)),
                                    out, b);
    }
    return out;
}

SeriesWindow AefinModel::head_input(const Prepared& prepared, heads::FanCache* fan_cache) const {
    if (!fan_) return concat_time(SeriesWindow(prepared.batch(), config_.channels, config_.horizon), prepared.input);
    const Matrix z1 = heads::fan_forward(as_row_matrix(prepared.non_stable), *fan_, fan_cache);
    return concat_time(from_row_matrix(z1, prepared.batch(), config_.channels), prepared.input);
}

ForecastPair AefinModel::forward(const Prepared& prepared, ForwardCache* cache) const {
    check_input(prepared.input);
    ForecastPair out;
    SeriesWindow bb_in = backbone_input(prepared);
    out.stable_pred = backbone_->forecast(bb_in);
    if (config_.backbone_only) {
        out.nonstable_pred = SeriesWindow(prepared.batch(), config_.channels, config_.horizon);
    } else {
        SeriesWindow z2 = head_input(prepared, cache ? &cache->fan : nullptr);
        out.nonstable_pred = heads::trend_mlp(z2, trend_, cache ? &cache->trend : nullptr);
        if (cache != nullptr) cache->z2 = std::move(z2);
    }
    if (cache != nullptr) cache->backbone_input = std::move(bb_in);
    out.total = out.stable_pred;
    for (std::size_t i = 0; i < out.total.size(); ++i) out.total.values()[i] += out.nonstable_pred.values()[i];
    return out;
}

void AefinModel::backward(const Prepared& prepared, const SeriesWindow& grad_stable,
                          const SeriesWindow& grad_nonstable, autodiff::Gradients& grads,
                          const ForwardCache* cache) const {
    ForwardCache local;
    if (cache == nullptr) {
        forward(prepared, &local);
        cache = &local;
    }
    std::size_t offset = 0;
    const std::size_t proj_at = offset;
    if (projection_) offset += 3;
    const std::size_t fan_at = offset;
    if (fan_) offset += 4;
    const std::size_t trend_at = offset;
    if (!config_.backbone_only) offset += 4;
    const std::size_t backbone_at = offset;

    const SeriesWindow& bb_in = cache->backbone_input;
    if (grads.size() < backbone_at) throw ShapeMismatch("gradient set smaller than parameter set");
    std::span<std::vector<double>> bb_grads(grads.data() + backbone_at, grads.size() - backbone_at);
    const SeriesWindow g_bb_in = backbone_->backward(bb_in, grad_stable, bb_grads);

    if (config_.backbone_only) return;

    if (projection_) {
        Matrix g_query(config_.channels, config_.channels);
        Matrix g_key(config_.channels, config_.channels);
        Matrix g_value(config_.channels, config_.channels);
        for (std::size_t b = 0; b < prepared.batch(); ++b) {
            const Matrix ns = attention::time_major(prepared.non_stable, b);
            const Matrix st = attention::time_major(prepared.stable, b);
            const auto g = attention::attend_backward(projected(ns, projection_->query), projected(st, projection_->key),
                                                      projected(st, projection_->value),
                                                      attention::time_major(g_bb_in, b));
            detail::accumulate_transposed_product(ns, g.queries, g_query);
            detail::accumulate_transposed_product(st, g.keys, g_key);
            detail::accumulate_transposed_product(st, g.values, g_value);
        }
        add_into(grads[proj_at], g_query.values());
        add_into(grads[proj_at + 1], g_key.values());
        add_into(grads[proj_at + 2], g_value.values());
    }

    heads::TrendParams g_trend = heads::TrendParams::zeros(config_.input_length, config_.horizon);
    const SeriesWindow g_z2 = heads::trend_mlp_backward(cache->z2, trend_, grad_nonstable, g_trend, &cache->trend);
    add_into(grads[trend_at], g_trend.w1.values());
    add_into(grads[trend_at + 1], g_trend.b1);
    add_into(grads[trend_at + 2], g_trend.w2.values());
    add_into(grads[trend_at + 3], g_trend.b2);

    if (fan_) {
        Matrix g_z1(prepared.input.rows(), config_.horizon);
        for (std::size_t n = 0; n < g_z1.rows(); ++n) {
            const auto src = g_z2.row(n / config_.channels, n % config_.channels);
            std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(config_.horizon), g_z1.row(n).begin());
        }
        heads::FanParams g_fan = heads::FanParams::zeros(config_.input_length, config_.horizon);
        heads::fan_backward(as_row_matrix(prepared.non_stable), *fan_, g_z1, g_fan, &cache->fan);
        add_into(grads[fan_at], g_fan.w1.values());
        add_into(grads[fan_at + 1], g_fan.b1);
        add_into(grads[fan_at + 2], g_fan.w2.values());
        add_into(grads[fan_at + 3], g_fan.b2);
    }
}

ForecastPair aefin_forward(const AefinModel& m, const SeriesWindow& x) { return m.forward(x); }

std::size_t param_count(const AefinModel& m) { return m.param_count(); }

std::size_t param_count(const ModelConfig& config) {
    validate(config);
    const std::size_t li = config.input_length;
    const std::size_t lp = config.horizon;
    std::size_t total = config.backbone == "linear"
                            ? li * lp + lp
                            : make_backbone(config.backbone, li, lp, nullptr)->param_count();
    if (config.backbone_only) return total;
    if (config.ablation.use_fan) total += (lp / 4) * li + lp / 4 + (lp / 2) * li + lp / 2;
    const std::size_t concat = li + lp;
    total += concat * 3 * concat + 3 * concat + 3 * concat * lp + lp;
    if (config.ablation.use_cross_attention && config.attention_projection) {
        total += 3 * config.channels * config.channels;
    }
    return total;
}

} // namespace aefin::model
