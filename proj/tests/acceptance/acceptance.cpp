// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include "commands.hpp"
#include "oracles.hpp"

#include "aefin/attention.hpp"
#include "aefin/data.hpp"
#include "aefin/gradient_suite.hpp"
#include "aefin/loss.hpp"
#include "aefin/model.hpp"
#include "aefin/spectral.hpp"
#include "aefin/training.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace aefin;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.5g", v);
    return buf;
}

Outcome reconstruction() {
    Stopwatch clock;
    std::mt19937_64 rng(2024);
    const std::size_t lengths[] = {16, 96, 168};
    double worst = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) {
        const std::size_t len = lengths[i % 3];
        const std::size_t k = 1 + (i / 3) % 5;
        const auto x = oracle::random_vector(len, rng, -10.0, 10.0);
        const auto d = spectral::decompose(x, k);
        for (std::size_t t = 0; t < len; ++t) worst = std::max(worst, std::abs(d.stable[t] + d.non_stable[t] - x[t]));
    }
    const double secs = clock.seconds();
    return {worst <= 1e-9 && secs < 5.0, "max error " + num(worst) + ", " + num(secs) + " s"};
}

Outcome dft_correctness() {
    Stopwatch clock;
    std::mt19937_64 rng(7);
    double worst_dft = 0.0, worst_round = 0.0;
    for (std::size_t len = 2; len <= 128; ++len) {
        for (int rep = 0; rep < 4; ++rep) {
            const auto x = oracle::random_vector(len, rng);
            const auto expected = oracle::naive_dft(x);
            const auto spectrum = spectral::dft_real(x);
            for (std::size_t b = 0; b < expected.size(); ++b) {
                worst_dft = std::max(worst_dft, std::abs(spectrum.bins[b] - expected[b]));
            }
            worst_round = std::max(worst_round, oracle::max_abs_diff(spectral::idft_real(spectrum), x));
        }
    }
    const double secs = clock.seconds();
    return {worst_dft <= 1e-9 && worst_round <= 1e-9 && secs < 5.0,
            "vs naive " + num(worst_dft) + ", round trip " + num(worst_round) + ", " + num(secs) + " s"};
}

Outcome attention_properties() {
    std::mt19937_64 rng(11);
    double row_sum = 0.0, shift = 0.0;
    bool bounded = true;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t len = 1 + rep % 12, dim = 1 + rep % 5;
        Matrix q(len, dim), k(len, dim), v(len, dim);
        q.values() = oracle::random_vector(q.size(), rng, -3, 3);
        k.values() = oracle::random_vector(k.size(), rng, -3, 3);
        v.values() = oracle::random_vector(v.size(), rng, -3, 3);

        const Matrix scores = attention::attention_scores(q, k);
        const Matrix alpha = attention::softmax_rows(scores);
        Matrix offset = scores;
        for (std::size_t i = 0; i < len; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < len; ++j) s += alpha(i, j);
            row_sum = std::max(row_sum, std::abs(s - 1.0));
            const double c = 100.0 * (static_cast<double>(i) - 3.5);
            for (std::size_t j = 0; j < len; ++j) offset(i, j) += c;
        }
        const Matrix shifted = attention::softmax_rows(offset);
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            shift = std::max(shift, std::abs(shifted.values()[i] - alpha.values()[i]));
        }

        const Matrix out = attention::attend(q, k, v);
        for (std::size_t d = 0; d < dim; ++d) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t j = 0; j < len; ++j) {
                lo = std::min(lo, v(j, d));
                hi = std::max(hi, v(j, d));
            }
            for (std::size_t i = 0; i < len; ++i) bounded = bounded && out(i, d) >= lo - 1e-12 && out(i, d) <= hi + 1e-12;
        }
    }

    Matrix q(2, 1), k(2, 1), v(2, 1);
    q(0, 0) = 1, q(1, 0) = 0;
    k(0, 0) = 1, k(1, 0) = 2;
    v(0, 0) = 10, v(1, 0) = 20;
    const Matrix hand = attention::attend(q, k, v);
    const double hand_err = std::max(std::abs(hand(0, 0) - 17.311), std::abs(hand(1, 0) - 15.0));

    const bool pass = row_sum <= 1e-12 && shift <= 1e-12 && bounded && hand_err <= 1e-3;
    return {pass, "row sum " + num(row_sum) + ", shift " + num(shift) + ", bounded " + (bounded ? "yes" : "no") +
                      ", example [" + num(hand(0, 0)) + ", " + num(hand(1, 0)) + "]"};
}

Outcome gradient_suite() {
    Stopwatch clock;
    const auto results = gradcheck::run_suite(gradcheck::suite_size("tiny"));
    double worst = 0.0;
    std::string worst_name;
    for (const auto& r : results) {
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            worst_name = r.name;
        }
    }
    const double secs = clock.seconds();
    return {worst < gradcheck::kSuiteTolerance && secs < 60.0,
            std::to_string(results.size()) + " operations, worst " + num(worst) + " (" + worst_name + "), " +
                num(secs) + " s"};
}

Outcome loss_arithmetic() {
    const double unit = loss::combine(1, 1, 1).total;
    const double mixed = loss::combine(2, 5, 10).total;

    const std::size_t len = 96;
    const auto wave = oracle::cosine(len, 5.0, 1.7, 0.4);
    SeriesWindow a(1, 1, len), b(1, 1, len);
    for (std::size_t t = 0; t < len; ++t) {
        a(0, 0, t) = wave[t];
        b(0, 0, t) = wave[(t + 13) % len];
    }
    const double shifted = loss::loss_freq(a, b);
    return {unit == 1.0 && mixed == 5.0 && shifted <= 1e-9,
            "(1,1,1) -> " + num(unit) + ", (2,5,10) -> " + num(mixed) + ", shifted freq loss " + num(shifted)};
}

Outcome parameter_count() {
    model::ModelConfig cfg;
    cfg.input_length = 96;
    cfg.horizon = 96;
    const std::size_t full = model::param_count(cfg);
    cfg.ablation.use_fan = false;
    const std::size_t no_fan = model::param_count(cfg);
    return {full == 182856 && full - no_fan == 6984,
            "full " + std::to_string(full) + ", without FAN " + std::to_string(full - no_fan) + " fewer"};
}

Outcome k_selection() {
    data::SeriesTable train;
    train.columns = {"x"};
    train.values = Matrix(1000, 1);
    for (std::size_t t = 0; t < 1000; ++t) {
        train.values(t, 0) = 2.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0 + 0.3);
    }
    const std::size_t k = data::select_k(train, 96);

    const char* names[] = {"ETTh1", "ETTh2", "ETTm1", "ETTm2", "Electricity", "ExchangeRate", "Traffic", "Weather"};
    const std::size_t expected[] = {4, 3, 11, 5, 3, 2, 30, 2};
    bool defaults = true;
    std::string got;
    for (std::size_t i = 0; i < 8; ++i) {
        const auto v = data::dataset_default_k(names[i]);
        defaults = defaults && v && *v == expected[i];
        got += (i ? "," : "") + (v ? std::to_string(*v) : std::string("?"));
    }
    return {k == 1 && defaults, "sinusoid -> " + std::to_string(k) + ", defaults {" + got + "}"};
}

Outcome synthetic_experiment() {
    Stopwatch clock;
    data::SynthSpec spec;
    spec.n = 3000;
    spec.d = 2;
    spec.trend_slope = 0.002;
    spec.seasonal = {{24.0, 1.0}, {168.0, 0.5}};
    spec.drift_amplitude = 1.0;
    spec.noise_std = 0.1;
    spec.seed = 42;

    training::TrainConfig config;
    config.input_length = 96;
    config.horizon = 96;
    config.seeds = {1, 2, 3, 4, 5};

    const auto experiment = training::prepare_experiment(data::synth_generate(spec), config);
    const auto aefin = training::run_experiment(experiment, config, "aefin+linear");

    training::TrainConfig baseline = config;
    baseline.backbone_only = true;
    baseline.plain_loss = true;
    const auto linear = training::run_experiment(experiment, baseline, "linear");

    const double secs = clock.seconds();
    const bool pass = aefin.report.mean_mse < linear.report.mean_mse && secs < 300.0;
    return {pass, "k=" + std::to_string(experiment.k) + ", aefin MSE " + num(aefin.report.mean_mse) +
                      " vs linear MSE " + num(linear.report.mean_mse) + ", " + num(secs) + " s"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int invoke(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"aefin"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / ("aefin_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream(root / "run.json")
            << R"({"synth": {"n": 2000, "d": 2, "trend_slope": 0.002, "seasonal": [{"period": 24, "amplitude": 1.0}],)"
               R"( "noise_std": 0.1, "seed": 3}, "input_length": 96, "horizon": 96, "max_epochs": 2, "seeds": [1]})";
    }
    bool ok = true;
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        ok = ok && invoke({"train", "--config", (root / "run.json").string(), "--output-dir", dir.string()}) == 0;
        ok = ok && invoke({"evaluate", "--checkpoint", (dir / "model.ckpt").string(), "--config",
                           (root / "run.json").string(), "--out", (dir / "evaluation.json").string()}) == 0;
    }
    std::size_t compared = 0;
    for (const char* f : {"metrics.json", "evaluation.json", "model.ckpt", "model_seed1.ckpt"}) {
        const std::string a = slurp(root / "a" / f), b = slurp(root / "b" / f);
        ok = ok && !a.empty() && a == b;
        ++compared;
    }
    fs::remove_all(root);
    return {ok, std::to_string(compared) + " files compared"};
}

} // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"reconstruction identity", reconstruction},
        {"dft correctness", dft_correctness},
        {"attention properties", attention_properties},
        {"gradient suite", gradient_suite},
        {"loss arithmetic", loss_arithmetic},
        {"parameter count", parameter_count},
        {"k selection", k_selection},
        {"synthetic end-to-end", synthetic_experiment},
        {"determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (std::size(criteria) - failed) << "/" << std::size(criteria) << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
