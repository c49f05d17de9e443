#pragma once

#include "aefin/autodiff.hpp"
#include "aefin/data.hpp"
#include "aefin/loss.hpp"
#include "aefin/model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace aefin::training {

struct TrainConfig {
    std::size_t input_length = 96;
    std::size_t horizon = 96;
    /// Explicit K; otherwise the dataset default, otherwise select_k on the training split.
    std::optional<std::size_t> k;
    std::string dataset_name;
    double k_threshold = 0.9;

    std::size_t batch_size = 32;
    std::size_t max_epochs = 30;
    std::size_t patience = 5;
    autodiff::AdamConfig adam;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    loss::LossWeights weights;
    model::Ablation ablation;
    /// MSE on the total forecast instead of the three-term objective.
    bool plain_loss = false;
    bool attention_projection = false;
    bool backbone_only = false;
    std::string backbone = "linear";
};

/// Throws ConfigError listing every violated constraint.
void validate(const TrainConfig& config);

std::size_t resolve_k(const TrainConfig& config, const data::SeriesTable& train);
model::ModelConfig model_config(const TrainConfig& config, std::size_t channels, std::size_t k);

struct EpochLog {
    std::size_t epoch = 0;
    loss::LossBreakdown train;
    double valid_loss = 0.0;
    bool improved = false;
    double seconds = 0.0;
};

/// One machine-parsable line: key=value pairs separated by spaces.
std::string format_log_line(const EpochLog& entry, const std::string& timestamp);

struct TrainResult {
    model::AefinModel model;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_valid = 0.0;
    std::size_t epochs_run = 0;
    double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch Adam with validation-based early stopping. Returns the
/// parameters of the best validation epoch.
TrainResult train(const model::ModelConfig& model_cfg, const TrainConfig& config, std::uint64_t seed,
                  const data::WindowSet& train_windows, const data::WindowSet& valid_windows,
                  const EpochCallback& on_epoch = {});

/// Objective used for training/validation under `config` (per-element mean).
double objective(const model::AefinModel& m, const TrainConfig& config, const model::Prepared& prepared,
                 const SeriesWindow& targets, const loss::TargetComponents* components,
                 loss::LossBreakdown* breakdown = nullptr, loss::LossGradients* grads = nullptr,
                 model::ForwardCache* cache = nullptr);

struct EvalResult {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t windows = 0;
    /// Denormalized total forecasts (L_pred x C per window), when requested.
    std::vector<data::SeriesTable> forecasts;
};

/// MSE/MAE of the total forecast over every test window, in normalized space.
EvalResult evaluate(const model::AefinModel& m, const data::WindowSet& test, const data::NormStats* stats = nullptr,
                    bool keep_forecasts = false);

struct SeedMetrics {
    std::uint64_t seed = 0;
    double mse = 0.0;
    double mae = 0.0;
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double seconds = 0.0;
};

struct MetricsReport {
    std::string label;
    std::size_t horizon = 0;
    std::size_t k = 0;
    std::size_t param_count = 0;
    std::vector<SeedMetrics> per_seed;
    double mean_mse = 0.0;
    double mean_mae = 0.0;
};

/// Fills mean_mse / mean_mae as arithmetic means of per_seed.
void finalize(MetricsReport& report);

/// Normalized splits, windows and the resolved K for one dataset.
struct Experiment {
    data::NormStats stats;
    data::Splits normalized;
    std::size_t k = 1;
    data::WindowSet train;
    data::WindowSet valid;
    data::WindowSet test;
};

Experiment prepare_experiment(const data::SeriesTable& raw, const TrainConfig& config);

struct RunOutput {
    MetricsReport report;
    std::vector<TrainResult> runs;
};

RunOutput run_experiment(const Experiment& experiment, const TrainConfig& config, const std::string& label = "aefin",
                         const std::function<void(std::uint64_t seed, const EpochLog&)>& on_epoch = {});

struct AblationRow {
    std::string name;
    TrainConfig config;
    MetricsReport report;
};

/// Variants: full, no-attention, no-fan, plain-loss. Same seeds for every row.
std::vector<AblationRow> ablation_variants(const TrainConfig& config);
std::vector<AblationRow> run_ablation(const Experiment& experiment, const TrainConfig& config);

} // namespace aefin::training
