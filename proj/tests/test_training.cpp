#include "doctest.h"

#include "aefin/error.hpp"
#include "aefin/training.hpp"

#include <cmath>

using namespace aefin;
using namespace aefin::training;

namespace {

data::SeriesTable learnable_series(std::size_t n = 600) {
    data::SynthSpec spec;
    spec.n = n;
    spec.d = 2;
    spec.trend_slope = 0.005;
    spec.seasonal = {{12.0, 1.0}, {40.0, 0.4}};
    spec.drift_amplitude = 0.5;
    spec.noise_std = 0.05;
    spec.seed = 17;
    return data::synth_generate(spec);
}

TrainConfig small_config() {
    TrainConfig c;
    c.input_length = 16;
    c.horizon = 8;
    c.k = 2;
    c.max_epochs = 4;
    c.seeds = {1};
    return c;
}

data::SeriesTable constant_table(std::size_t n, std::size_t d, double value) {
    data::SeriesTable t;
    t.values = Matrix(n, d);
    for (double& v : t.values.values()) v = value;
    for (std::size_t c = 0; c < d; ++c) t.columns.push_back("c" + std::to_string(c));
    return t;
}

} // namespace

TEST_CASE("config validation reports every problem") {
    TrainConfig c;
    CHECK_NOTHROW(validate(c));
    c.batch_size = 0;
    c.horizon = 30;
    c.seeds.clear();
    c.weights.freq = -1.0;
    try {
        validate(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("batch_size") != std::string::npos);
        CHECK(msg.find("horizon") != std::string::npos);
        CHECK(msg.find("seeds") != std::string::npos);
        CHECK(msg.find("loss weights") != std::string::npos);
    }
    c = {};
    c.ablation.use_fan = false;
    c.horizon = 30;
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("K resolution order") {
    const auto series = learnable_series();
    TrainConfig c = small_config();
    CHECK(resolve_k(c, series) == 2);
    c.k.reset();
    c.dataset_name = "ETTh2";
    CHECK(resolve_k(c, series) == 3);
    c.dataset_name.clear();
    const std::size_t chosen = resolve_k(c, series);
    CHECK(chosen == data::select_k(series, 16, 0.9));
    CHECK(chosen >= 1);
}

TEST_CASE("training behaviour") {
    const auto experiment = prepare_experiment(learnable_series(), small_config());
    const auto mcfg = model_config(small_config(), 2, experiment.k);

    SUBCASE("training loss decreases over the first epochs") {
        TrainConfig c = small_config();
        c.max_epochs = 3;
        c.patience = 10;
        const auto r = train(mcfg, c, 1, experiment.train, experiment.valid);
        REQUIRE(r.log.size() == 3);
        CHECK(r.log[1].train.total < r.log[0].train.total);
        CHECK(r.log[2].train.total < r.log[1].train.total);
        for (const auto& e : r.log) CHECK(e.train.total == doctest::Approx(0.5 * e.train.l_stable + 0.2 * e.train.l_non_stable + 0.3 * e.train.l_freq));
    }

    SUBCASE("patience zero stops one epoch past the best") {
        TrainConfig c = small_config();
        c.max_epochs = 30;
        c.patience = 0;
        c.adam.lr = 0.05;
        const auto r = train(mcfg, c, 3, experiment.train, experiment.valid);
        if (r.epochs_run < c.max_epochs) CHECK(r.epochs_run == r.best_epoch + 1);
        CHECK_FALSE(r.log.back().improved);
    }

    SUBCASE("best validation parameters are restored") {
        TrainConfig c = small_config();
        c.max_epochs = 6;
        c.adam.lr = 0.05;
        const auto r = train(mcfg, c, 2, experiment.train, experiment.valid);
        const auto prepared = r.model.prepare(experiment.valid.all_inputs());
        const auto targets = experiment.valid.all_targets();
        const auto components = loss::target_decompose(targets, mcfg.k);
        CHECK(objective(r.model, c, prepared, targets, &components) == doctest::Approx(r.best_valid).epsilon(1e-12));
        double best = r.log[0].valid_loss;
        for (const auto& e : r.log) best = std::min(best, e.valid_loss);
        CHECK(r.best_valid == best);
    }

    SUBCASE("identical configuration and seed give identical logs") {
        const auto a = train(mcfg, small_config(), 4, experiment.train, experiment.valid);
        const auto b = train(mcfg, small_config(), 4, experiment.train, experiment.valid);
        REQUIRE(a.log.size() == b.log.size());
        for (std::size_t i = 0; i < a.log.size(); ++i) {
            CHECK(a.log[i].train.total == b.log[i].train.total);
            CHECK(a.log[i].valid_loss == b.log[i].valid_loss);
            CHECK(format_log_line({a.log[i].epoch, a.log[i].train, a.log[i].valid_loss, a.log[i].improved, 0.0}, "t") ==
                  format_log_line({b.log[i].epoch, b.log[i].train, b.log[i].valid_loss, b.log[i].improved, 0.0}, "t"));
        }
        const auto c = train(mcfg, small_config(), 5, experiment.train, experiment.valid);
        CHECK(c.log[0].train.total != a.log[0].train.total);
    }

    SUBCASE("divergence is reported with its step") {
        TrainConfig c = small_config();
        c.adam.lr = 1e300;
        CHECK_THROWS_AS(train(mcfg, c, 1, experiment.train, experiment.valid), DivergenceError);
    }
}

TEST_CASE("log line format") {
    EpochLog e;
    e.epoch = 3;
    e.train = loss::combine(1.0, 2.0, 3.0);
    e.valid_loss = 0.25;
    e.improved = true;
    const auto line = format_log_line(e, "2026-01-01T00:00:00");
    CHECK(line.find("epoch=3") == 0);
    CHECK(line.find("valid=0.25") != std::string::npos);
    CHECK(line.find("improved=1") != std::string::npos);
    CHECK(line.find("time=2026-01-01T00:00:00") != std::string::npos);
    CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("evaluate") {
    const auto zeros = data::make_windows(constant_table(40, 2, 0.0), 8, 8);
    model::ModelConfig cfg;
    cfg.input_length = 8;
    cfg.horizon = 8;
    cfg.channels = 2;
    cfg.k = 1;
    model::AefinModel m(cfg, 0, model::Init::zeros);

    const auto perfect = evaluate(m, zeros);
    CHECK(perfect.windows == 25);
    CHECK(perfect.mse == 0.0);
    CHECK(perfect.mae == 0.0);

    auto* linear = dynamic_cast<model::LinearBackbone*>(&m.backbone());
    REQUIRE(linear != nullptr);
    linear->bias.assign(8, 1.0);
    const data::NormStats stats{{5.0, -1.0}, {2.0, 0.5}};
    const auto shifted = evaluate(m, zeros, &stats, true);
    CHECK(shifted.mse == doctest::Approx(1.0));
    CHECK(shifted.mae == doctest::Approx(1.0));
    REQUIRE(shifted.forecasts.size() == 25);
    CHECK(shifted.forecasts[0].steps() == 8);
    CHECK(shifted.forecasts[0].values(3, 0) == doctest::Approx(7.0));
    CHECK(shifted.forecasts[0].values(3, 1) == doctest::Approx(-0.5));

    cfg.horizon = 4;
    CHECK_THROWS_AS(evaluate(model::AefinModel(cfg, 0), zeros), ShapeMismatch);
}

TEST_CASE("seed averaging and reproducibility") {
    MetricsReport r;
    r.per_seed = {{1, 1.0, 0.5}, {2, 2.0, 1.0}, {3, 4.0, 0.0}, {4, 0.5, 2.0}, {5, 2.5, 1.5}};
    finalize(r);
    CHECK(r.mean_mse == doctest::Approx(2.0));
    CHECK(r.mean_mae == doctest::Approx(1.0));

    TrainConfig c = small_config();
    c.max_epochs = 2;
    c.seeds = {1, 2};
    const auto experiment = prepare_experiment(learnable_series(), c);
    const auto both = run_experiment(experiment, c).report;
    TrainConfig one = c;
    one.seeds = {2};
    const auto second = run_experiment(experiment, one).report;
    CHECK(both.per_seed.size() == 2);
    CHECK(both.per_seed[1].mse == second.per_seed[0].mse);
    CHECK(both.mean_mse == doctest::Approx((both.per_seed[0].mse + both.per_seed[1].mse) / 2.0).epsilon(1e-15));
    const auto again = run_experiment(experiment, c).report;
    CHECK(again.mean_mse == both.mean_mse);
    CHECK(again.mean_mae == both.mean_mae);
}

TEST_CASE("ablation table") {
    TrainConfig c = small_config();
    c.max_epochs = 1;
    c.seeds = {1, 2};
    const auto rows = run_ablation(prepare_experiment(learnable_series(), c), c);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].name == "full");
    CHECK(rows[1].name == "no-attention");
    CHECK(rows[2].name == "no-fan");
    CHECK(rows[3].name == "plain-loss");
    for (const auto& row : rows) {
        CHECK(row.config.seeds == c.seeds);
        CHECK(row.report.per_seed.size() == 2);
    }
    CHECK(rows[1].report.param_count == rows[0].report.param_count);
    CHECK(rows[0].report.param_count - rows[2].report.param_count == heads::FanParams::zeros(16, 8).count());
    CHECK(rows[3].report.param_count == rows[0].report.param_count);

    const auto defaults = ablation_variants(TrainConfig{});
    model::ModelConfig full = model_config(defaults[0].config, 1, 1);
    model::ModelConfig no_fan = model_config(defaults[2].config, 1, 1);
    CHECK(model::param_count(full) - model::param_count(no_fan) == 6984);
}
