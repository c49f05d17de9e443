#include "aefin/training.hpp"

#include "aefin/error.hpp"
#include "aefin/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace aefin::training {

namespace {

constexpr std::size_t kEvalChunk = 256;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> iota_indices(std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    return idx;
}

bool uses_components(const TrainConfig& config) { return !config.plain_loss && !config.backbone_only; }

/// Per-element mean of the objective over a whole window set, evaluated in chunks.
double dataset_objective(const model::AefinModel& m, const TrainConfig& config, const model::Prepared& prepared,
                         const SeriesWindow& targets, const loss::TargetComponents* components) {
    const std::size_t n = prepared.batch();
    double weighted = 0.0;
    for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
        const auto idx = iota_indices(begin, std::min(n, begin + kEvalChunk));
        std::optional<loss::TargetComponents> chunk_components;
        if (components != nullptr) {
            chunk_components = loss::TargetComponents{gather_batch(components->stable, idx),
                                                      gather_batch(components->non_stable, idx)};
        }
        const double value = objective(m, config, prepared.gather(idx), gather_batch(targets, idx),
                                       chunk_components ? &*chunk_components : nullptr);
        weighted += value * static_cast<double>(idx.size());
    }
    return weighted / static_cast<double>(n);
}

} // namespace

void validate(const TrainConfig& config) {
    std::vector<std::string> problems;
    if (config.input_length < 2) problems.push_back("input_length must be >= 2");
    if (config.horizon == 0) problems.push_back("horizon must be positive");
    if (config.ablation.use_fan && !config.backbone_only && config.horizon % 4 != 0) {
        problems.push_back("horizon must be divisible by 4 when the FAN head is enabled");
    }
    if (config.k && (*config.k < 1 || *config.k > spectral::one_sided_size(std::min(config.input_length, config.horizon)))) {
        problems.push_back("k must lie in [1, floor(min(input_length, horizon)/2)+1]");
    }
    if (!config.dataset_name.empty() && !config.k && !data::dataset_default_k(config.dataset_name)) {
        problems.push_back("unknown dataset_name '" + config.dataset_name + "'");
    }
    if (!(config.k_threshold > 0.0 && config.k_threshold <= 1.0)) problems.push_back("k_threshold must lie in (0, 1]");
    if (config.batch_size == 0) problems.push_back("batch_size must be positive");
    if (config.max_epochs == 0) problems.push_back("max_epochs must be positive");
    if (!(config.adam.lr > 0.0)) problems.push_back("lr must be positive");
    if (!(config.adam.beta1 >= 0.0 && config.adam.beta1 < 1.0)) problems.push_back("beta1 must lie in [0, 1)");
    if (!(config.adam.beta2 >= 0.0 && config.adam.beta2 < 1.0)) problems.push_back("beta2 must lie in [0, 1)");
    if (!(config.adam.eps > 0.0)) problems.push_back("eps must be positive");
    if (config.seeds.empty()) problems.push_back("seeds must not be empty");
    const auto& w = config.weights;
    if (w.stable < 0.0 || w.non_stable < 0.0 || w.freq < 0.0) problems.push_back("loss weights must be non-negative");
    if (!problems.empty()) {
        std::string msg = "invalid training configuration:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
}

std::size_t resolve_k(const TrainConfig& config, const data::SeriesTable& train) {
    if (config.k) return *config.k;
    if (!config.dataset_name.empty()) {
        if (auto k = data::dataset_default_k(config.dataset_name)) return *k;
        throw ConfigError("unknown dataset_name '" + config.dataset_name + "'");
    }
    const std::size_t limit = spectral::one_sided_size(std::min(config.input_length, config.horizon));
    return std::min(data::select_k(train, config.input_length, config.k_threshold), limit);
}

model::ModelConfig model_config(const TrainConfig& config, std::size_t channels, std::size_t k) {
    model::ModelConfig m;
    m.input_length = config.input_length;
    m.horizon = config.horizon;
    m.channels = channels;
    m.k = k;
    m.ablation = config.ablation;
    m.attention_projection = config.attention_projection;
    m.backbone_only = config.backbone_only;
    m.backbone = config.backbone;
    return m;
}

std::string format_log_line(const EpochLog& e, const std::string& timestamp) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "epoch=%zu train_total=%.10g train_stable=%.10g train_non_stable=%.10g train_freq=%.10g "
                  "valid=%.10g improved=%d seconds=%.3f time=%s",
                  e.epoch, e.train.total, e.train.l_stable, e.train.l_non_stable, e.train.l_freq, e.valid_loss,
                  e.improved ? 1 : 0, e.seconds, timestamp.c_str());
    return buf;
}

double objective(const model::AefinModel& m, const TrainConfig& config, const model::Prepared& prepared,
                 const SeriesWindow& targets, const loss::TargetComponents* components,
                 loss::LossBreakdown* breakdown, loss::LossGradients* grads, model::ForwardCache* cache) {
    const model::ForecastPair forecast = m.forward(prepared, cache);
    if (!uses_components(config)) {
        const double value = loss::loss_plain(forecast, targets, grads);
        if (breakdown != nullptr) *breakdown = loss::LossBreakdown{value, 0.0, 0.0, value, {1.0, 0.0, 0.0}};
        return value;
    }
    const loss::LossBreakdown b =
        components != nullptr ? loss::loss_total(forecast, *components, config.weights, grads)
                              : loss::loss_total(forecast, targets, m.config().k, config.weights, grads);
    if (breakdown != nullptr) *breakdown = b;
    return b.total;
}

TrainResult train(const model::ModelConfig& model_cfg, const TrainConfig& config, std::uint64_t seed,
                  const data::WindowSet& train_windows, const data::WindowSet& valid_windows,
                  const EpochCallback& on_epoch) {
    validate(config);
    const auto run_start = Clock::now();

    model::AefinModel m(model_cfg, seed);
    const model::Prepared train_prepared = m.prepare(train_windows.all_inputs());
    const SeriesWindow train_targets = train_windows.all_targets();
    const model::Prepared valid_prepared = m.prepare(valid_windows.all_inputs());
    const SeriesWindow valid_targets = valid_windows.all_targets();

    std::optional<loss::TargetComponents> train_components, valid_components;
    if (uses_components(config)) {
        train_components = loss::target_decompose(train_targets, model_cfg.k);
        valid_components = loss::target_decompose(valid_targets, model_cfg.k);
    }

    const autodiff::ParamSet params = m.parameters();
    autodiff::AdamState adam(params, config.adam);
    std::mt19937_64 rng(seed);

    TrainResult result{m, {}, 0, INFINITY, 0, 0.0};
    auto best = params.snapshot();
    std::size_t stalled = 0;
    std::size_t step = 0;
    std::vector<std::size_t> order = iota_indices(0, train_windows.size());

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        std::shuffle(order.begin(), order.end(), rng);

        loss::LossBreakdown sum{0.0, 0.0, 0.0, 0.0, config.weights};
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::span<const std::size_t> idx(order.data() + begin,
                                                   std::min(config.batch_size, order.size() - begin));
            const model::Prepared batch = train_prepared.gather(idx);
            const SeriesWindow targets = gather_batch(train_targets, idx);
            std::optional<loss::TargetComponents> components;
            if (train_components) {
                components = loss::TargetComponents{gather_batch(train_components->stable, idx),
                                                    gather_batch(train_components->non_stable, idx)};
            }

            loss::LossBreakdown breakdown;
            loss::LossGradients loss_grads;
            model::ForwardCache cache;
            const double value = objective(m, config, batch, targets, components ? &*components : nullptr,
                                           &breakdown, &loss_grads, &cache);
            ++step;
            if (!std::isfinite(value)) {
                throw DivergenceError(step, "epoch " + std::to_string(epoch) + ", batch starting at " + std::to_string(begin));
            }

            autodiff::Gradients grads = autodiff::zero_gradients(params);
            m.backward(batch, loss_grads.stable_pred, loss_grads.nonstable_pred, grads, &cache);
            autodiff::adam_step(params, grads, adam);

            const double w = static_cast<double>(idx.size());
            sum.l_stable += breakdown.l_stable * w;
            sum.l_non_stable += breakdown.l_non_stable * w;
            sum.l_freq += breakdown.l_freq * w;
            sum.total += breakdown.total * w;
        }
        const double n = static_cast<double>(order.size());
        EpochLog entry;
        entry.epoch = epoch;
        entry.train = loss::LossBreakdown{sum.l_stable / n, sum.l_non_stable / n, sum.l_freq / n, sum.total / n,
                                          config.weights};
        entry.valid_loss = dataset_objective(m, config, valid_prepared, valid_targets,
                                             valid_components ? &*valid_components : nullptr);
        if (!std::isfinite(entry.valid_loss)) throw DivergenceError(step, "validation loss after epoch " + std::to_string(epoch));

        entry.improved = entry.valid_loss < result.best_valid;
        if (entry.improved) {
            result.best_valid = entry.valid_loss;
            result.best_epoch = epoch;
            best = params.snapshot();
            stalled = 0;
        } else {
            ++stalled;
        }
        entry.seconds = seconds_since(epoch_start);
        result.log.push_back(entry);
        result.epochs_run = epoch;
        if (on_epoch) on_epoch(entry);
        if (stalled > config.patience) break;
    }

    params.restore(best);
    result.model = std::move(m);
    result.seconds = seconds_since(run_start);
    return result;
}

EvalResult evaluate(const model::AefinModel& m, const data::WindowSet& test, const data::NormStats* stats,
                    bool keep_forecasts) {
    if (test.size() == 0) throw InvalidInput("evaluate: empty test set");
    if (test.horizon() != m.config().horizon || test.input_length() != m.config().input_length) {
        throw ShapeMismatch("evaluate: windows are " + std::to_string(test.input_length()) + "->" +
                            std::to_string(test.horizon()) + ", model is " + std::to_string(m.config().input_length) +
                            "->" + std::to_string(m.config().horizon));
    }
    if (keep_forecasts && stats == nullptr) throw InvalidInput("evaluate: denormalized forecasts need NormStats");

    EvalResult out;
    out.windows = test.size();
    double se = 0.0;
    double ae = 0.0;
    std::size_t count = 0;
    for (std::size_t begin = 0; begin < test.size(); begin += kEvalChunk) {
        const auto idx = iota_indices(begin, std::min(test.size(), begin + kEvalChunk));
        const SeriesWindow truth = test.targets(idx);
        const model::ForecastPair f = m.forward(test.inputs(idx));
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double d = f.total.values()[i] - truth.values()[i];
            se += d * d;
            ae += std::abs(d);
        }
        count += truth.size();
        if (keep_forecasts) {
            for (std::size_t b = 0; b < idx.size(); ++b) {
                data::SeriesTable table;
                table.values = Matrix(f.total.length(), f.total.channels());
                for (std::size_t c = 0; c < f.total.channels(); ++c) {
                    table.columns.push_back("ch" + std::to_string(c));
                    for (std::size_t t = 0; t < f.total.length(); ++t) table.values(t, c) = f.total(b, c, t);
                }
                out.forecasts.push_back(data::zscore_invert(table, *stats));
            }
        }
    }
    out.mse = se / static_cast<double>(count);
    out.mae = ae / static_cast<double>(count);
    return out;
}

void finalize(MetricsReport& report) {
    if (report.per_seed.empty()) {
        report.mean_mse = report.mean_mae = 0.0;
        return;
    }
    double mse = 0.0;
    double mae = 0.0;
    for (const auto& s : report.per_seed) {
        mse += s.mse;
        mae += s.mae;
    }
    report.mean_mse = mse / static_cast<double>(report.per_seed.size());
    report.mean_mae = mae / static_cast<double>(report.per_seed.size());
}

Experiment prepare_experiment(const data::SeriesTable& raw, const TrainConfig& config) {
    validate(config);
    const data::Splits splits = data::split_chronological(raw, config.input_length, config.horizon);
    data::NormStats stats = data::zscore_fit(splits.train);
    data::Splits normalized{data::zscore_apply(splits.train, stats), data::zscore_apply(splits.valid, stats),
                            data::zscore_apply(splits.test, stats)};
    const std::size_t k = resolve_k(config, normalized.train);
    data::WindowSet train_w(normalized.train, config.input_length, config.horizon);
    data::WindowSet valid_w(normalized.valid, config.input_length, config.horizon);
    data::WindowSet test_w(normalized.test, config.input_length, config.horizon);
    return Experiment{std::move(stats), std::move(normalized), k, std::move(train_w), std::move(valid_w),
                      std::move(test_w)};
}

RunOutput run_experiment(const Experiment& experiment, const TrainConfig& config, const std::string& label,
                         const std::function<void(std::uint64_t, const EpochLog&)>& on_epoch) {
    validate(config);
    const model::ModelConfig model_cfg = model_config(config, experiment.train.channels(), experiment.k);

    RunOutput out;
    out.report.label = label;
    out.report.horizon = config.horizon;
    out.report.k = experiment.k;
    out.report.param_count = model::param_count(model_cfg);
    for (std::uint64_t seed : config.seeds) {
        EpochCallback cb;
        if (on_epoch) cb = [&](const EpochLog& e) { on_epoch(seed, e); };
        TrainResult run = train(model_cfg, config, seed, experiment.train, experiment.valid, cb);
        const EvalResult eval = evaluate(run.model, experiment.test);
        out.report.per_seed.push_back({seed, eval.mse, eval.mae, run.epochs_run, run.best_epoch, run.seconds});
        out.runs.push_back(std::move(run));
    }
    finalize(out.report);
    return out;
}

std::vector<AblationRow> ablation_variants(const TrainConfig& config) {
    std::vector<AblationRow> rows;
    TrainConfig full = config;
    full.ablation = {};
    full.plain_loss = false;
    full.backbone_only = false;
    rows.push_back({"full", full, {}});

    TrainConfig no_attention = full;
    no_attention.ablation.use_cross_attention = false;
    rows.push_back({"no-attention", no_attention, {}});

    TrainConfig no_fan = full;
    no_fan.ablation.use_fan = false;
    rows.push_back({"no-fan", no_fan, {}});

    TrainConfig plain = full;
    plain.plain_loss = true;
    rows.push_back({"plain-loss", plain, {}});
    return rows;
}

std::vector<AblationRow> run_ablation(const Experiment& experiment, const TrainConfig& config) {
    auto rows = ablation_variants(config);
    for (auto& row : rows) row.report = run_experiment(experiment, row.config, row.name).report;
    return rows;
}

} // namespace aefin::training
