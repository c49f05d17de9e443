#include "aefin/data.hpp"

#include "aefin/error.hpp"
#include "aefin/spectral.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace aefin::data {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return s;
}

std::optional<double> parse_number(const std::string& cell) {
    std::string_view text = cell;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
    return value;
}

} // namespace

SeriesTable SeriesTable::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > steps()) throw InvalidInput("slice out of range");
    SeriesTable out;
    out.columns = columns;
    out.values = Matrix(end - begin, variables());
    std::copy(values.values().begin() + static_cast<std::ptrdiff_t>(begin * variables()),
              values.values().begin() + static_cast<std::ptrdiff_t>(end * variables()), out.values.values().begin());
    if (!timestamps.empty()) {
        out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                              timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

SeriesTable parse_csv(std::istream& in, const CsvOptions& options) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw InvalidInput("CSV is empty (header row required)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<std::string> header = split_fields(line);
    const std::string first = lower(header.front());
    const bool has_index = first == "date" || first == "timestamp";
    const std::size_t skip = has_index ? 1 : 0;
    if (header.size() <= skip) throw InvalidInput("CSV has no value columns");

    SeriesTable table;
    table.columns.assign(header.begin() + static_cast<std::ptrdiff_t>(skip), header.end());
    const std::size_t width = table.columns.size();

    std::vector<double> values;
    std::vector<double> previous(width, 0.0);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError(row, fields.size(),
                             "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        if (has_index) table.timestamps.push_back(fields.front());
        for (std::size_t c = 0; c < width; ++c) {
            const std::string& cell = fields[c + skip];
            auto value = parse_number(cell);
            const bool missing = cell.empty() || (value && !std::isfinite(*value));
            if (!value && !missing) {
                throw ParseError(row, c + skip + 1, "cannot parse '" + cell + "' in column '" + table.columns[c] + "'");
            }
            if (missing) {
                if (options.missing == MissingPolicy::reject || row == 1) {
                    throw ParseError(row, c + skip + 1, "missing or non-finite value in column '" + table.columns[c] + "'");
                }
                value = previous[c];
            }
            previous[c] = *value;
            values.push_back(*value);
        }
    }
    if (row == 0) throw InvalidInput("CSV has a header but no data rows");

    table.values = Matrix(row, width);
    table.values.values() = std::move(values);
    return table;
}

SeriesTable load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_csv(in, options);
}

void write_csv(std::ostream& out, const SeriesTable& table) {
    const bool with_index = !table.timestamps.empty();
    if (with_index) out << "date,";
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t r = 0; r < table.steps(); ++r) {
        if (with_index) out << table.timestamps[r] << ',';
        for (std::size_t c = 0; c < table.variables(); ++c) out << (c ? "," : "") << table.values(r, c);
        out << '\n';
    }
}

void write_csv(const std::string& path, const SeriesTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_csv(out, table);
    if (!out) throw IoError("write failed for '" + path + "'");
}

NormStats zscore_fit(const SeriesTable& train) {
    if (train.steps() == 0) throw InvalidInput("zscore_fit: empty training table");
    const std::size_t n = train.steps();
    NormStats stats{std::vector<double>(train.variables(), 0.0), std::vector<double>(train.variables(), 0.0)};
    for (std::size_t c = 0; c < train.variables(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += train.values(r, c);
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = train.values(r, c) - mean;
            sq += d * d;
        }
        stats.mean[c] = mean;
        stats.std[c] = std::max(std::sqrt(sq / static_cast<double>(n)), kStdFloor);
    }
    return stats;
}

SeriesTable zscore_apply(const SeriesTable& t, const NormStats& stats) {
    if (stats.mean.size() != t.variables()) throw ShapeMismatch("zscore_apply: column count mismatch");
    SeriesTable out = t;
    for (std::size_t r = 0; r < t.steps(); ++r) {
        for (std::size_t c = 0; c < t.variables(); ++c) out.values(r, c) = (t.values(r, c) - stats.mean[c]) / stats.std[c];
    }
    return out;
}

SeriesTable zscore_invert(const SeriesTable& t, const NormStats& stats) {
    if (stats.mean.size() != t.variables()) throw ShapeMismatch("zscore_invert: column count mismatch");
    SeriesTable out = t;
    for (std::size_t r = 0; r < t.steps(); ++r) {
        for (std::size_t c = 0; c < t.variables(); ++c) out.values(r, c) = t.values(r, c) * stats.std[c] + stats.mean[c];
    }
    return out;
}

Splits split_chronological(const SeriesTable& t, std::size_t input_length, std::size_t horizon, SplitRatios ratios) {
    const std::size_t n = t.steps();
    const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
    const auto n_valid = static_cast<std::size_t>(std::floor(ratios.valid * static_cast<double>(n)));
    if (n_train + n_valid > n) throw InvalidInput("split ratios exceed 1");
    const std::size_t n_test = n - n_train - n_valid;
    const std::size_t need = input_length + horizon;
    const std::pair<const char*, std::size_t> sizes[] = {{"train", n_train}, {"valid", n_valid}, {"test", n_test}};
    for (const auto& [name, size] : sizes) {
        if (size < need) {
            throw InvalidInput(std::string(name) + " split has " + std::to_string(size) + " steps, one window needs " +
                               std::to_string(need));
        }
    }
    return {t.slice(0, n_train), t.slice(n_train, n_train + n_valid), t.slice(n_train + n_valid, n)};
}

WindowSet::WindowSet(const SeriesTable& segment, std::size_t input_length, std::size_t horizon)
    : values_(segment.values), input_length_(input_length), horizon_(horizon), count_(0) {
    if (input_length == 0 || horizon == 0) throw InvalidInput("window lengths must be positive");
    if (segment.steps() < input_length + horizon) {
        throw InvalidInput("segment of " + std::to_string(segment.steps()) + " steps is shorter than one window (" +
                           std::to_string(input_length + horizon) + ")");
    }
    count_ = segment.steps() - (input_length + horizon) + 1;
}

SeriesWindow WindowSet::gather(std::span<const std::size_t> indices, std::size_t offset, std::size_t length) const {
    SeriesWindow out(indices.size(), channels(), length);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        if (indices[b] >= count_) throw InvalidInput("window index out of range");
        const std::size_t start = indices[b] + offset;
        for (std::size_t c = 0; c < channels(); ++c) {
            auto dst = out.row(b, c);
            for (std::size_t t = 0; t < length; ++t) dst[t] = values_(start + t, c);
        }
    }
    return out;
}

SeriesWindow WindowSet::inputs(std::span<const std::size_t> indices) const { return gather(indices, 0, input_length_); }

SeriesWindow WindowSet::targets(std::span<const std::size_t> indices) const {
    return gather(indices, input_length_, horizon_);
}

SeriesWindow WindowSet::all_inputs() const {
    std::vector<std::size_t> idx(count_);
    for (std::size_t i = 0; i < count_; ++i) idx[i] = i;
    return inputs(idx);
}

SeriesWindow WindowSet::all_targets() const {
    std::vector<std::size_t> idx(count_);
    for (std::size_t i = 0; i < count_; ++i) idx[i] = i;
    return targets(idx);
}

WindowSet make_windows(const SeriesTable& segment, std::size_t input_length, std::size_t horizon) {
    return WindowSet(segment, input_length, horizon);
}

std::size_t select_k(const SeriesTable& train, std::size_t input_length, double threshold) {
    if (input_length < 2) throw InvalidInput("select_k: input length must be >= 2");
    if (train.steps() < input_length) {
        throw InvalidInput("select_k: training split shorter than one input window");
    }
    const std::size_t bins = spectral::one_sided_size(input_length);
    std::vector<double> mean_amp(bins, 0.0);
    std::vector<double> series(input_length);
    const std::size_t windows = train.steps() - input_length + 1;
    for (std::size_t c = 0; c < train.variables(); ++c) {
        for (std::size_t w = 0; w < windows; ++w) {
            for (std::size_t t = 0; t < input_length; ++t) series[t] = train.values(w + t, c);
            const auto amp = spectral::amplitude_spectrum(series);
            for (std::size_t k = 0; k < bins; ++k) mean_amp[k] += amp[k];
        }
    }
    const double peak = *std::max_element(mean_amp.begin(), mean_amp.end());
    const auto count = static_cast<std::size_t>(
        std::count_if(mean_amp.begin(), mean_amp.end(), [&](double a) { return a >= threshold * peak; }));
    return std::max<std::size_t>(count, 1);
}

const std::vector<std::pair<std::string, std::size_t>>& dataset_defaults() {
    static const std::vector<std::pair<std::string, std::size_t>> table = {
        {"ETTh1", 4}, {"ETTh2", 3},        {"ETTm1", 11},  {"ETTm2", 5},
        {"Electricity", 3}, {"ExchangeRate", 2}, {"Traffic", 30}, {"Weather", 2},
    };
    return table;
}

std::optional<std::size_t> dataset_default_k(std::string_view name) {
    const std::string key = lower(std::string(name));
    for (const auto& [dataset, k] : dataset_defaults()) {
        if (lower(dataset) == key) return k;
    }
    return std::nullopt;
}

SeriesTable synth_generate(const SynthSpec& spec) {
    if (spec.n == 0 || spec.d == 0) throw InvalidInput("synth_generate: n and d must be positive");
    for (const auto& term : spec.seasonal) {
        if (!(term.period > 0.0)) throw InvalidInput("synth_generate: seasonal period must be positive");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, spec.noise_std > 0.0 ? spec.noise_std : 1.0);

    SeriesTable table;
    table.values = Matrix(spec.n, spec.d);
    for (std::size_t c = 0; c < spec.d; ++c) {
        table.columns.push_back("ch" + std::to_string(c));
        std::vector<double> phases(spec.seasonal.size(), 0.0);
        if (spec.random_phases) {
            for (double& p : phases) p = phase_dist(rng);
        }
        for (std::size_t t = 0; t < spec.n; ++t) {
            const double tt = static_cast<double>(t);
            double v = spec.trend_slope * tt;
            for (std::size_t j = 0; j < spec.seasonal.size(); ++j) {
                v += spec.seasonal[j].amplitude *
                     std::sin(2.0 * std::numbers::pi * tt / spec.seasonal[j].period + phases[j]);
            }
            v += spec.drift_amplitude * std::sin(2.0 * std::numbers::pi * tt / static_cast<double>(spec.n));
            if (spec.noise_std > 0.0) v += noise(rng);
            table.values(t, c) = v;
        }
    }
    return table;
}

} // namespace aefin::data
