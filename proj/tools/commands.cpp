#include "commands.hpp"

#include "run_config.hpp"

#include "aefin/checkpoint.hpp"
#include "aefin/gradient_suite.hpp"
#include "aefin/spectral.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace aefin::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path)) throw UsageError(what + " not found: '" + path + "'");
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string scientific(double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(2) << v;
    return s.str();
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Left-aligned columns separated by two spaces.
void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            s += cells[c];
            if (c + 1 < cells.size()) s += std::string(width[c] - cells[c].size() + 2, ' ');
        }
        out << s << "\n";
    };
    line(header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w + 2;
    out << std::string(total - 2, '-') << "\n";
    for (const auto& r : rows) line(r);
}

json report_json(const training::MetricsReport& r) {
    json seeds = json::array();
    for (const auto& s : r.per_seed) {
        seeds.push_back({{"seed", s.seed},
                         {"mse", s.mse},
                         {"mae", s.mae},
                         {"epochs_run", s.epochs_run},
                         {"best_epoch", s.best_epoch}});
    }
    return {{"method", r.label},  {"horizon", r.horizon},   {"k", r.k},        {"param_count", r.param_count},
            {"mse", r.mean_mse}, {"mae", r.mean_mae},      {"per_seed", seeds}};
}

std::vector<std::string> report_row(const std::string& dataset, const training::MetricsReport& r) {
    return {dataset, std::to_string(r.horizon), r.label, fixed(r.mean_mse), fixed(r.mean_mae)};
}

const std::vector<std::string> kResultHeader{"Dataset", "Horizon", "Method", "MSE", "MAE"};

std::string method_name(const training::TrainConfig& t) {
    return t.backbone_only ? t.backbone : "aefin+" + t.backbone;
}

data::SeriesTable load_dataset(const RunConfig& c) {
    if (c.synth) return data::synth_generate(*c.synth);
    require_file(c.data, "data file");
    return data::load_csv(c.data, c.csv);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- decompose

struct DecomposeArgs {
    std::string input;
    std::optional<std::size_t> k;
    std::string dataset_name;
    std::size_t window = 96;
    std::size_t offset = 0;
    std::string out_dir;
    bool verify = false;
    bool forward_fill = false;
};

int cmd_decompose(const DecomposeArgs& a, std::ostream& out) {
    require_file(a.input, "input file");
    std::size_t k = 0;
    if (a.k) {
        k = *a.k;
    } else if (!a.dataset_name.empty()) {
        const auto dk = data::dataset_default_k(a.dataset_name);
        if (!dk) throw UsageError("unknown dataset name '" + a.dataset_name + "'");
        k = *dk;
    } else {
        throw UsageError("one of --k and --dataset-name is required");
    }
    if (a.window == 0) throw UsageError("--window must be positive");
    if (k == 0 || k > spectral::one_sided_size(a.window)) {
        throw UsageError("--k must lie in [1, " + std::to_string(spectral::one_sided_size(a.window)) + "] for window " +
                         std::to_string(a.window));
    }

    data::CsvOptions csv;
    if (a.forward_fill) csv.missing = data::MissingPolicy::forward_fill;
    const auto table = data::load_csv(a.input, csv);
    if (a.offset + a.window > table.steps()) {
        throw UsageError("window [" + std::to_string(a.offset) + ", " + std::to_string(a.offset + a.window) +
                         ") exceeds the " + std::to_string(table.steps()) + " rows of '" + a.input + "'");
    }
    const auto segment = table.slice(a.offset, a.offset + a.window);
    auto stable = segment;
    auto non_stable = segment;

    std::ostringstream bins;
    bins << "k=" << k << " window=" << a.window << " offset=" << a.offset << "\n";
    std::vector<double> column(a.window);
    for (std::size_t c = 0; c < segment.variables(); ++c) {
        for (std::size_t t = 0; t < a.window; ++t) column[t] = segment.values(t, c);
        const auto d = spectral::decompose(column, k);
        for (std::size_t t = 0; t < a.window; ++t) {
            stable.values(t, c) = d.stable[t];
            non_stable.values(t, c) = d.non_stable[t];
        }
        bins << segment.columns[c];
        for (std::size_t i : d.dominant.indices) bins << " " << i;
        bins << "\n";
    }

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    data::write_csv((dir / "stable.csv").string(), stable);
    data::write_csv((dir / "non_stable.csv").string(), non_stable);
    write_text(dir / "bins.txt", bins.str());
    out << "wrote " << (dir / "stable.csv").string() << ", " << (dir / "non_stable.csv").string() << ", "
        << (dir / "bins.txt").string() << "\n";

    if (a.verify) {
        const auto s = data::load_csv((dir / "stable.csv").string());
        const auto n = data::load_csv((dir / "non_stable.csv").string());
        double worst = 0.0;
        for (std::size_t i = 0; i < segment.values.size(); ++i) {
            const double sum = s.values.values()[i] + n.values.values()[i];
            worst = std::max(worst, std::abs(sum - segment.values.values()[i]));
        }
        const bool ok = worst <= 1e-9;
        out << "reconstruction max_abs_error=" << scientific(worst) << (ok ? " PASS" : " FAIL") << "\n";
        if (!ok) return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string config;
    std::optional<std::string> data;
    std::optional<std::string> output_dir;
    std::optional<std::size_t> input_length;
    std::optional<std::size_t> horizon;
    std::optional<std::size_t> k;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> patience;
    std::optional<std::size_t> batch_size;
    std::optional<double> lr;
    std::vector<std::uint64_t> seeds;
    bool ablation = false;
    bool baseline = false;
    bool verbose = false;
};

RunConfig resolve_config(const std::string& path) {
    require_file(path, "config file");
    return load_run_config(path);
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    RunConfig c = resolve_config(a.config);
    if (a.data) {
        c.data = *a.data;
        c.synth.reset();
    }
    if (a.output_dir) c.output_dir = *a.output_dir;
    if (a.input_length) c.train.input_length = *a.input_length;
    if (a.horizon) c.train.horizon = *a.horizon;
    if (a.k) c.train.k = *a.k;
    if (a.epochs) c.train.max_epochs = *a.epochs;
    if (a.patience) c.train.patience = *a.patience;
    if (a.batch_size) c.train.batch_size = *a.batch_size;
    if (a.lr) c.train.adam.lr = *a.lr;
    if (!a.seeds.empty()) c.train.seeds = a.seeds;
    c.ablation = c.ablation || a.ablation;
    c.baseline = c.baseline || a.baseline;
    validate(c);

    const auto raw = load_dataset(c);
    const auto experiment = training::prepare_experiment(raw, c.train);
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);

    std::ofstream log(dir / "train_log.txt");
    if (!log) throw IoError("cannot write '" + (dir / "train_log.txt").string() + "'");
    auto logger = [&](const std::string& method) {
        return [&, method](std::uint64_t seed, const training::EpochLog& e) {
            const std::string line =
                "method=" + method + " seed=" + std::to_string(seed) + " " + training::format_log_line(e, utc_now());
            log << line << "\n" << std::flush;
            if (a.verbose) out << line << "\n";
        };
    };

    const std::string method = method_name(c.train);
    const auto main_run = training::run_experiment(experiment, c.train, method, logger(method));
    for (std::size_t i = 0; i < main_run.runs.size(); ++i) {
        const std::uint64_t seed = c.train.seeds[i];
        const model::CheckpointMeta meta{seed, experiment.stats};
        model::save_checkpoint((dir / ("model_seed" + std::to_string(seed) + ".ckpt")).string(), main_run.runs[i].model,
                               meta);
        if (i == 0) model::save_checkpoint((dir / "model.ckpt").string(), main_run.runs[i].model, meta);
    }

    const std::string dataset = c.display_label();
    json results = json::array({report_json(main_run.report)});
    std::vector<std::vector<std::string>> rows{report_row(dataset, main_run.report)};

    if (c.baseline && !c.train.backbone_only) {
        training::TrainConfig b = c.train;
        b.backbone_only = true;
        b.plain_loss = true;
        const auto baseline = training::run_experiment(experiment, b, method_name(b), logger(method_name(b)));
        results.push_back(report_json(baseline.report));
        rows.push_back(report_row(dataset, baseline.report));
    }

    json metrics = {{"dataset", dataset}, {"k", experiment.k}, {"config", to_json(c)}, {"results", results}};

    std::vector<std::vector<std::string>> ablation_rows;
    if (c.ablation) {
        json ablation = json::array();
        for (const auto& row : training::run_ablation(experiment, c.train)) {
            json r = report_json(row.report);
            r["variant"] = row.name;
            ablation.push_back(r);
            ablation_rows.push_back({row.name, std::to_string(row.report.param_count), fixed(row.report.mean_mse),
                                     fixed(row.report.mean_mae)});
        }
        metrics["ablation"] = ablation;
    }

    write_text(dir / "metrics.json", metrics.dump(2) + "\n");

    print_table(out, kResultHeader, rows);
    if (!ablation_rows.empty()) {
        out << "\n";
        print_table(out, {"Variant", "Params", "MSE", "MAE"}, ablation_rows);
    }
    out << "\nk=" << experiment.k << " params=" << main_run.report.param_count << " outputs in " << dir.string()
        << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string checkpoint;
    std::string config;
    std::optional<std::string> data;
    std::optional<std::string> out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    require_file(a.checkpoint, "checkpoint");
    RunConfig c = resolve_config(a.config);
    if (a.data) {
        c.data = *a.data;
        c.synth.reset();
    }
    validate(c);

    const auto loaded = model::load_checkpoint(a.checkpoint);
    const auto& mc = loaded.model.config();
    if (mc.horizon != c.train.horizon) {
        throw ShapeMismatch("checkpoint horizon " + std::to_string(mc.horizon) + " differs from configured horizon " +
                            std::to_string(c.train.horizon));
    }
    if (mc.input_length != c.train.input_length) {
        throw ShapeMismatch("checkpoint input_length " + std::to_string(mc.input_length) +
                            " differs from configured input_length " + std::to_string(c.train.input_length));
    }

    const auto raw = load_dataset(c);
    if (raw.variables() != mc.channels) {
        throw ShapeMismatch("data has " + std::to_string(raw.variables()) + " channels, checkpoint expects " +
                            std::to_string(mc.channels));
    }
    const auto splits = data::split_chronological(raw, mc.input_length, mc.horizon);
    const auto stats = loaded.meta.norm ? *loaded.meta.norm : data::zscore_fit(splits.train);
    const auto test = data::make_windows(data::zscore_apply(splits.test, stats), mc.input_length, mc.horizon);
    const auto eval = training::evaluate(loaded.model, test);

    training::MetricsReport report;
    report.label = method_name(c.train);
    report.horizon = mc.horizon;
    report.k = mc.k;
    report.param_count = loaded.model.param_count();
    report.per_seed.push_back({loaded.meta.seed, eval.mse, eval.mae, 0, 0, 0.0});
    training::finalize(report);

    print_table(out, kResultHeader, {report_row(c.display_label(), report)});
    out << "windows=" << eval.windows << "\n";
    if (a.out) {
        json j = report_json(report);
        j["dataset"] = c.display_label();
        j["windows"] = eval.windows;
        write_text(*a.out, j.dump(2) + "\n");
    }
    return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
    std::string checkpoint;
    std::string input;
    std::string out;
    bool forward_fill = false;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    require_file(a.checkpoint, "checkpoint");
    require_file(a.input, "input file");
    const auto loaded = model::load_checkpoint(a.checkpoint);
    const auto& mc = loaded.model.config();

    data::CsvOptions csv;
    if (a.forward_fill) csv.missing = data::MissingPolicy::forward_fill;
    const auto table = data::load_csv(a.input, csv);
    if (table.variables() != mc.channels) {
        throw ShapeMismatch("input has " + std::to_string(table.variables()) + " channels, checkpoint expects " +
                            std::to_string(mc.channels));
    }
    if (table.steps() < mc.input_length) {
        throw UsageError("input has " + std::to_string(table.steps()) + " rows, the model needs the last " +
                         std::to_string(mc.input_length));
    }

    auto history = table.slice(table.steps() - mc.input_length, table.steps());
    if (loaded.meta.norm) history = data::zscore_apply(history, *loaded.meta.norm);
    SeriesWindow x(1, mc.channels, mc.input_length);
    for (std::size_t c = 0; c < mc.channels; ++c)
        for (std::size_t t = 0; t < mc.input_length; ++t) x(0, c, t) = history.values(t, c);

    const auto forecast = loaded.model.forward(x).total;
    data::SeriesTable result;
    result.columns = table.columns;
    result.values = Matrix(mc.horizon, mc.channels);
    for (std::size_t c = 0; c < mc.channels; ++c)
        for (std::size_t t = 0; t < mc.horizon; ++t) result.values(t, c) = forecast(0, c, t);
    if (loaded.meta.norm) result = data::zscore_invert(result, *loaded.meta.norm);

    data::write_csv(a.out, result);
    out << "wrote " << mc.horizon << " x " << mc.channels << " forecast to " << a.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const std::string& size, std::uint64_t seed, std::ostream& out) {
    const auto results = gradcheck::run_suite(gradcheck::suite_size(size), seed);
    std::vector<std::vector<std::string>> rows;
    bool ok = true;
    for (const auto& r : results) {
        const bool pass = r.max_rel_error < gradcheck::kSuiteTolerance;
        ok = ok && pass;
        rows.push_back({r.name, std::to_string(r.coordinates), scientific(r.max_rel_error), pass ? "PASS" : "FAIL"});
    }
    print_table(out, {"Operation", "Coordinates", "MaxRelError", "Status"}, rows);
    return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- params

struct ParamsArgs {
    std::optional<std::string> config;
    std::size_t input_length = 96;
    std::size_t horizon = 96;
    std::size_t channels = 1;
    std::size_t k = 1;
    bool no_fan = false;
    bool no_attention = false;
    bool projection = false;
    bool backbone_only = false;
};

int cmd_params(const ParamsArgs& a, std::ostream& out) {
    training::TrainConfig t;
    t.input_length = a.input_length;
    t.horizon = a.horizon;
    t.ablation.use_fan = !a.no_fan;
    t.ablation.use_cross_attention = !a.no_attention;
    t.attention_projection = a.projection;
    t.backbone_only = a.backbone_only;
    if (a.config) t = resolve_config(*a.config).train;
    const auto cfg = training::model_config(t, a.channels, t.k.value_or(a.k));
    model::validate(cfg);
    out << model::param_count(cfg) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const std::string& spec_path, const std::string& out_path, std::ostream& out) {
    require_file(spec_path, "synth spec");
    const auto spec = load_synth_spec(spec_path);
    const auto table = data::synth_generate(spec);
    data::write_csv(out_path, table);
    out << "wrote " << table.steps() << " x " << table.variables() << " series to " << out_path << "\n";
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive frequency-decomposed forecasting toolkit", "aefin"};
    app.require_subcommand(1);
    std::function<int()> action;

    DecomposeArgs dec;
    auto* decompose = app.add_subcommand("decompose", "Split each column of a CSV window into stable and non-stable parts");
    decompose->add_option("--input", dec.input, "CSV file")->required();
    auto* k_opt = decompose->add_option("--k", dec.k, "Number of dominant frequency bins");
    decompose->add_option("--dataset-name", dec.dataset_name, "Take K from the dataset defaults")->excludes(k_opt);
    decompose->add_option("--window", dec.window, "Window length")->capture_default_str();
    decompose->add_option("--offset", dec.offset, "First row of the window")->capture_default_str();
    decompose->add_option("--out", dec.out_dir, "Output directory")->required();
    decompose->add_flag("--verify", dec.verify, "Re-read the outputs and check stable + non_stable == input");
    decompose->add_flag("--forward-fill", dec.forward_fill, "Fill missing values from the previous row");
    decompose->callback([&] { action = [&] { return cmd_decompose(dec, out); }; });

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train over every configured seed and report test metrics");
    train->add_option("--config", tr.config, "Run configuration (JSON)")->required();
    train->add_option("--data", tr.data, "CSV file, replaces the configured data source");
    train->add_option("--output-dir", tr.output_dir, "Directory for checkpoints, log and metrics");
    train->add_option("--input-length", tr.input_length);
    train->add_option("--horizon", tr.horizon);
    train->add_option("--k", tr.k);
    train->add_option("--epochs", tr.epochs, "Maximum epochs");
    train->add_option("--patience", tr.patience);
    train->add_option("--batch-size", tr.batch_size);
    train->add_option("--lr", tr.lr, "Adam learning rate");
    train->add_option("--seeds", tr.seeds, "Seeds, replaces the configured list");
    train->add_flag("--ablation", tr.ablation, "Also run the ablation variants");
    train->add_flag("--baseline", tr.baseline, "Also train the plain backbone");
    train->add_flag("--verbose", tr.verbose, "Echo epoch log lines");
    train->callback([&] { action = [&] { return cmd_train(tr, out); }; });

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Test-split metrics of a checkpoint");
    evaluate->add_option("--checkpoint", ev.checkpoint)->required();
    evaluate->add_option("--config", ev.config, "Run configuration naming the data")->required();
    evaluate->add_option("--data", ev.data, "CSV file, replaces the configured data source");
    evaluate->add_option("--out", ev.out, "Write the metrics as JSON");
    evaluate->callback([&] { action = [&] { return cmd_evaluate(ev, out); }; });

    PredictArgs pr;
    auto* predict = app.add_subcommand("predict", "Forecast the rows following a CSV history");
    predict->add_option("--checkpoint", pr.checkpoint)->required();
    predict->add_option("--input", pr.input, "CSV history; the last input_length rows are used")->required();
    predict->add_option("--out", pr.out, "Forecast CSV")->required();
    predict->add_flag("--forward-fill", pr.forward_fill, "Fill missing values from the previous row");
    predict->callback([&] { action = [&] { return cmd_predict(pr, out); }; });

    std::string gc_size = "tiny";
    std::uint64_t gc_seed = 0;
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every backward rule");
    gc->add_option("--size", gc_size)->check(CLI::IsMember({"tiny", "small"}))->capture_default_str();
    gc->add_option("--seed", gc_seed)->capture_default_str();
    gc->callback([&] { action = [&] { return cmd_gradcheck(gc_size, gc_seed, out); }; });

    ParamsArgs pa;
    auto* params = app.add_subcommand("params", "Print the learnable parameter count");
    params->add_option("--config", pa.config, "Take lengths and switches from a run configuration");
    params->add_option("--input-length", pa.input_length)->capture_default_str();
    params->add_option("--horizon", pa.horizon)->capture_default_str();
    params->add_option("--channels", pa.channels)->capture_default_str();
    params->add_option("--k", pa.k)->capture_default_str();
    params->add_flag("--no-fan", pa.no_fan);
    params->add_flag("--no-attention", pa.no_attention);
    params->add_flag("--projection", pa.projection, "Learned attention projections");
    params->add_flag("--backbone-only", pa.backbone_only);
    params->callback([&] { action = [&] { return cmd_params(pa, out); }; });

    std::string synth_spec, synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic series from a JSON description");
    synth->add_option("--spec", synth_spec)->required();
    synth->add_option("--out", synth_out)->required();
    synth->callback([&] { action = [&] { return cmd_synth(synth_spec, synth_out, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        return action();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ShapeMismatch& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

} // namespace aefin::cli
