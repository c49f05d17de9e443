#include "run_config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace aefin::cli {

using nlohmann::json;

namespace {

/// Visits the known keys of one JSON object and records every problem.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where, std::vector<std::string>& errors)
        : j_(j), where_(std::move(where)), errors_(errors) {
        if (!j_.is_object()) error(where_.empty() ? "config" : where_, "expected an object");
    }

    void field(const std::string& key, const std::function<void(const json&, const std::string&)>& read) {
        known_.insert(key);
        if (!j_.is_object()) return;
        const auto it = j_.find(key);
        if (it != j_.end()) read(*it, path(key));
    }

    void size(const std::string& key, std::size_t& out) {
        field(key, [&](const json& v, const std::string& p) {
            if (v.is_number_unsigned()) out = v.get<std::size_t>();
            else error(p, "expected a non-negative integer");
        });
    }

    void size(const std::string& key, std::optional<std::size_t>& out) {
        field(key, [&](const json& v, const std::string& p) {
            if (v.is_null()) out.reset();
            else if (v.is_number_unsigned()) out = v.get<std::size_t>();
            else error(p, "expected a non-negative integer or null");
        });
    }

    void u64(const std::string& key, std::uint64_t& out) {
        field(key, [&](const json& v, const std::string& p) {
            if (v.is_number_unsigned()) out = v.get<std::uint64_t>();
            else error(p, "expected a non-negative integer");
        });
    }

    void number(const std::string& key, double& out) {
        field(key, [&](const json& v, const std::string& p) {
            if (v.is_number()) out = v.get<double>();
            else error(p, "expected a number");
        });
    }

    void boolean(const std::string& key, bool& out) {
        field(key, [&](const json& v, const std::string& p) {
            if (v.is_boolean()) out = v.get<bool>();
            else error(p, "expected true or false");
        });
    }

    void string(const std::string& key, std::string& out) {
        field(key, [&](const json& v, const std::string& p) {
            if (v.is_string()) out = v.get<std::string>();
            else error(p, "expected a string");
        });
    }

    void object(const std::string& key, const std::function<void(ObjectReader&)>& read) {
        field(key, [&](const json& v, const std::string& p) {
            ObjectReader nested(v, p, errors_);
            read(nested);
            nested.finish();
        });
    }

    void finish() {
        if (!j_.is_object()) return;
        for (const auto& [key, value] : j_.items()) {
            if (!known_.contains(key)) error(path(key), "unknown key");
        }
    }

    void error(const std::string& p, const std::string& what) { errors_.push_back(p + ": " + what); }

private:
    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    const json& j_;
    std::string where_;
    std::vector<std::string>& errors_;
    std::set<std::string> known_;
};

std::string join(const std::vector<std::string>& errors) {
    std::string out = "invalid configuration:";
    for (const auto& e : errors) out += "\n  " + e;
    return out;
}

void read_synth(ObjectReader& r, data::SynthSpec& s, std::vector<std::string>& errors) {
    r.size("n", s.n);
    r.size("d", s.d);
    r.number("trend_slope", s.trend_slope);
    r.number("drift_amplitude", s.drift_amplitude);
    r.number("noise_std", s.noise_std);
    r.u64("seed", s.seed);
    r.boolean("random_phases", s.random_phases);
    r.field("seasonal", [&](const json& v, const std::string& p) {
        if (!v.is_array()) {
            r.error(p, "expected an array of {period, amplitude} objects");
            return;
        }
        s.seasonal.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            data::SeasonalTerm term;
            ObjectReader t(v[i], p + "[" + std::to_string(i) + "]", errors);
            t.number("period", term.period);
            t.number("amplitude", term.amplitude);
            t.finish();
            s.seasonal.push_back(term);
        }
    });
}

void check_synth(const data::SynthSpec& s, const std::string& where, std::vector<std::string>& errors) {
    if (s.n == 0) errors.push_back(where + "n: must be positive");
    if (s.d == 0) errors.push_back(where + "d: must be positive");
    if (!(s.noise_std >= 0.0)) errors.push_back(where + "noise_std: must be non-negative");
    for (std::size_t i = 0; i < s.seasonal.size(); ++i) {
        if (!(s.seasonal[i].period > 0.0)) {
            errors.push_back(where + "seasonal[" + std::to_string(i) + "].period: must be positive");
        }
    }
}

} // namespace

void collect_problems(const RunConfig& c, std::vector<std::string>& errors);

std::string RunConfig::display_label() const {
    if (!label.empty()) return label;
    if (!train.dataset_name.empty()) return train.dataset_name;
    if (!data.empty()) return std::filesystem::path(data).stem().string();
    return "synthetic";
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

RunConfig parse_run_config(const json& j, const std::string& base_dir) {
    RunConfig c;
    std::vector<std::string> errors;
    ObjectReader r(j, "", errors);
    auto& t = c.train;

    r.string("data", c.data);
    r.object("synth", [&](ObjectReader& s) {
        c.synth.emplace();
        read_synth(s, *c.synth, errors);
    });
    r.field("missing", [&](const json& v, const std::string& p) {
        if (v == "reject") c.csv.missing = data::MissingPolicy::reject;
        else if (v == "forward_fill") c.csv.missing = data::MissingPolicy::forward_fill;
        else r.error(p, "expected \"reject\" or \"forward_fill\"");
    });
    r.string("label", c.label);
    r.string("dataset_name", t.dataset_name);
    r.size("k", t.k);
    r.number("k_threshold", t.k_threshold);
    r.size("input_length", t.input_length);
    r.size("horizon", t.horizon);
    r.size("batch_size", t.batch_size);
    r.size("max_epochs", t.max_epochs);
    r.size("patience", t.patience);
    r.number("learning_rate", t.adam.lr);
    r.number("beta1", t.adam.beta1);
    r.number("beta2", t.adam.beta2);
    r.number("eps", t.adam.eps);
    r.field("seeds", [&](const json& v, const std::string& p) {
        const bool ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& s) {
                            return s.is_number_unsigned();
                        });
        if (ok) t.seeds = v.get<std::vector<std::uint64_t>>();
        else r.error(p, "expected an array of non-negative integers");
    });
    r.object("loss_weights", [&](ObjectReader& w) {
        w.number("stable", t.weights.stable);
        w.number("non_stable", t.weights.non_stable);
        w.number("freq", t.weights.freq);
    });
    r.boolean("use_cross_attention", t.ablation.use_cross_attention);
    r.boolean("use_fan", t.ablation.use_fan);
    r.boolean("plain_loss", t.plain_loss);
    r.boolean("attention_projection", t.attention_projection);
    r.boolean("backbone_only", t.backbone_only);
    r.string("backbone", t.backbone);
    r.string("output_dir", c.output_dir);
    r.boolean("ablation", c.ablation);
    r.boolean("baseline", c.baseline);
    r.finish();

    collect_problems(c, errors);
    if (!errors.empty()) throw ConfigError(join(errors));
    if (!c.data.empty() && !base_dir.empty() && std::filesystem::path(c.data).is_relative()) {
        c.data = (std::filesystem::path(base_dir) / c.data).lexically_normal().string();
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    const json j = read_json_file(path);
    return parse_run_config(j, std::filesystem::path(path).parent_path().string());
}

void collect_problems(const RunConfig& c, std::vector<std::string>& errors) {
    if (c.data.empty() == !c.synth.has_value()) errors.push_back("exactly one of data and synth must be given");
    if (c.synth) check_synth(*c.synth, "synth.", errors);
    if (c.output_dir.empty()) errors.push_back("output_dir: must not be empty");
    try {
        training::validate(c.train);
    } catch (const ConfigError& e) {
        // One problem per line after the heading line.
        std::istringstream lines(e.what());
        std::string line;
        std::getline(lines, line);
        while (std::getline(lines, line)) {
            const auto start = line.find_first_not_of(" -");
            if (start != std::string::npos) errors.push_back(line.substr(start));
        }
    }
}

void validate(const RunConfig& c) {
    std::vector<std::string> errors;
    collect_problems(c, errors);
    if (!errors.empty()) throw ConfigError(join(errors));
}

json to_json(const data::SynthSpec& s) {
    json seasonal = json::array();
    for (const auto& term : s.seasonal) seasonal.push_back({{"period", term.period}, {"amplitude", term.amplitude}});
    return {{"n", s.n},
            {"d", s.d},
            {"trend_slope", s.trend_slope},
            {"seasonal", seasonal},
            {"drift_amplitude", s.drift_amplitude},
            {"noise_std", s.noise_std},
            {"seed", s.seed},
            {"random_phases", s.random_phases}};
}

json to_json(const RunConfig& c) {
    const auto& t = c.train;
    json j = {{"label", c.display_label()},
              {"dataset_name", t.dataset_name},
              {"k", t.k ? json(*t.k) : json(nullptr)},
              {"k_threshold", t.k_threshold},
              {"input_length", t.input_length},
              {"horizon", t.horizon},
              {"batch_size", t.batch_size},
              {"max_epochs", t.max_epochs},
              {"patience", t.patience},
              {"learning_rate", t.adam.lr},
              {"beta1", t.adam.beta1},
              {"beta2", t.adam.beta2},
              {"eps", t.adam.eps},
              {"seeds", t.seeds},
              {"loss_weights", {{"stable", t.weights.stable}, {"non_stable", t.weights.non_stable}, {"freq", t.weights.freq}}},
              {"use_cross_attention", t.ablation.use_cross_attention},
              {"use_fan", t.ablation.use_fan},
              {"plain_loss", t.plain_loss},
              {"attention_projection", t.attention_projection},
              {"backbone_only", t.backbone_only},
              {"backbone", t.backbone},
              {"missing", c.csv.missing == data::MissingPolicy::reject ? "reject" : "forward_fill"},
              {"ablation", c.ablation},
              {"baseline", c.baseline}};
    if (c.synth) j["synth"] = to_json(*c.synth);
    else j["data"] = c.data;
    return j;
}

data::SynthSpec parse_synth_spec(const json& j) {
    data::SynthSpec s;
    std::vector<std::string> errors;
    ObjectReader r(j, "", errors);
    read_synth(r, s, errors);
    r.finish();
    check_synth(s, "", errors);
    if (!errors.empty()) throw ConfigError(join(errors));
    return s;
}

data::SynthSpec load_synth_spec(const std::string& path) { return parse_synth_spec(read_json_file(path)); }

} // namespace aefin::cli
