#pragma once

#include "aefin/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aefin::data {

/// N x D observations (rows are time steps).
struct SeriesTable {
    Matrix values;
    std::vector<std::string> columns;
    std::vector<std::string> timestamps; // empty unless the file had a date/timestamp column

    std::size_t steps() const { return values.rows(); }
    std::size_t variables() const { return values.cols(); }

    SeriesTable slice(std::size_t begin, std::size_t end) const;
};

enum class MissingPolicy { reject, forward_fill };

struct CsvOptions {
    MissingPolicy missing = MissingPolicy::reject;
};

SeriesTable parse_csv(std::istream& in, const CsvOptions& options = {});
SeriesTable load_csv(const std::string& path, const CsvOptions& options = {});

/// Writes with round-trip precision; timestamps are written back when present.
void write_csv(std::ostream& out, const SeriesTable& table);
void write_csv(const std::string& path, const SeriesTable& table);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;
};

inline constexpr double kStdFloor = 1e-8;

NormStats zscore_fit(const SeriesTable& train);
SeriesTable zscore_apply(const SeriesTable& t, const NormStats& stats);
SeriesTable zscore_invert(const SeriesTable& t, const NormStats& stats);

struct SplitRatios {
    double train = 0.7;
    double valid = 0.2;
};

struct Splits {
    SeriesTable train;
    SeriesTable valid;
    SeriesTable test;
};

/// Contiguous floor(0.7 N) / floor(0.2 N) / remainder segments; every segment
/// must hold at least one input+target window.
Splits split_chronological(const SeriesTable& t, std::size_t input_length, std::size_t horizon,
                           SplitRatios ratios = {});

/// Stride-1 (input, target) windows over one segment.
class WindowSet {
public:
    WindowSet(const SeriesTable& segment, std::size_t input_length, std::size_t horizon);

    std::size_t size() const { return count_; }
    std::size_t input_length() const { return input_length_; }
    std::size_t horizon() const { return horizon_; }
    std::size_t channels() const { return values_.cols(); }

    /// Window i covers steps [i, i + L_in) as input and [i + L_in, i + L_in + L_pred) as target.
    SeriesWindow inputs(std::span<const std::size_t> indices) const;
    SeriesWindow targets(std::span<const std::size_t> indices) const;
    SeriesWindow all_inputs() const;
    SeriesWindow all_targets() const;

private:
    SeriesWindow gather(std::span<const std::size_t> indices, std::size_t offset, std::size_t length) const;

    Matrix values_;
    std::size_t input_length_;
    std::size_t horizon_;
    std::size_t count_;
};

WindowSet make_windows(const SeriesTable& segment, std::size_t input_length, std::size_t horizon);

/// Number of one-sided bins whose amplitude, averaged over every stride-1
/// training input window and channel, reaches threshold x the largest mean amplitude.
std::size_t select_k(const SeriesTable& train, std::size_t input_length, double threshold = 0.9);

/// Reference K values for the standard benchmark datasets (case-insensitive).
std::optional<std::size_t> dataset_default_k(std::string_view name);
const std::vector<std::pair<std::string, std::size_t>>& dataset_defaults();

struct SeasonalTerm {
    double period = 24.0;
    double amplitude = 1.0;
};

struct SynthSpec {
    std::size_t n = 1000;
    std::size_t d = 1;
    double trend_slope = 0.0;
    std::vector<SeasonalTerm> seasonal;
    double drift_amplitude = 0.0;
    double noise_std = 0.0;
    std::uint64_t seed = 1;
    bool random_phases = true;
};

/// x_c[t] = slope t + sum_j a_j sin(2 pi t / p_j + phi_cj) + drift sin(2 pi t / n) + N(0, noise_std^2).
SeriesTable synth_generate(const SynthSpec& spec);

} // namespace aefin::data
