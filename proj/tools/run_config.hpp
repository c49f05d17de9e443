#pragma once

#include "aefin/data.hpp"
#include "aefin/error.hpp"
#include "aefin/training.hpp"

#include "json.hpp"

#include <optional>
#include <string>

namespace aefin::cli {

/// Bad arguments, unreadable inputs or invalid configuration (exit code 2).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Everything a `train` or `evaluate` run needs besides the command line.
struct RunConfig {
    training::TrainConfig train;
    /// Exactly one of `data` (CSV path) and `synth` is set.
    std::string data;
    std::optional<data::SynthSpec> synth;
    data::CsvOptions csv;
    std::string label;
    std::string output_dir = "aefin_run";
    bool ablation = false;
    bool baseline = false;

    /// Dataset name for reports: `label`, else the dataset name, else the file stem.
    std::string display_label() const;
};

/// Strict parse: unknown keys and type errors are collected and reported in
/// one ConfigError. Relative data paths are resolved against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

/// Throws ConfigError listing every problem (including missing data source).
void validate(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);

data::SynthSpec parse_synth_spec(const nlohmann::json& j);
data::SynthSpec load_synth_spec(const std::string& path);
nlohmann::json to_json(const data::SynthSpec& spec);

/// Parsed JSON document; UsageError when missing, ConfigError when malformed.
nlohmann::json read_json_file(const std::string& path);

} // namespace aefin::cli
