#include "aefin/checkpoint.hpp"

#include "aefin/error.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace aefin::model {

namespace {

constexpr const char* kMagic = "aefin-checkpoint";

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex_double(double v) {
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%a", v);
    return buf.data();
}

std::string join_hex(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + hex_double(values[i]);
    return out;
}

std::string shape_text(const std::vector<std::size_t>& shape) {
    std::string out;
    for (std::size_t i = 0; i < shape.size(); ++i) out += (i ? "x" : "") + std::to_string(shape[i]);
    return out;
}

void append_le(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>(bits & 0xFF));
        bits >>= 8;
    }
}

double read_le(const char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
    return std::bit_cast<double>(bits);
}

struct Manifest {
    std::map<std::string, std::string> fields;
    std::vector<std::pair<std::string, std::string>> params; // name, shape text

    const std::string& get(const std::string& key) const {
        auto it = fields.find(key);
        if (it == fields.end()) throw CorruptFile("checkpoint manifest lacks '" + key + "'");
        return it->second;
    }

    std::uint64_t get_uint(const std::string& key) const {
        const std::string& text = get(key);
        char* end = nullptr;
        const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
        if (text.empty() || *end != '\0') throw CorruptFile("checkpoint field '" + key + "' is not an integer");
        return v;
    }

    bool get_flag(const std::string& key) const {
        const std::string& text = get(key);
        if (text != "0" && text != "1") throw CorruptFile("checkpoint flag '" + key + "' must be 0 or 1");
        return text == "1";
    }
};

std::vector<double> parse_hex_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || *end != '\0') throw CorruptFile("checkpoint field '" + key + "' is malformed");
        out.push_back(v);
    }
    return out;
}

Manifest read_manifest(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw CorruptFile("not an aefin checkpoint");
    Manifest m;
    bool ended = false;
    while (std::getline(in, line)) {
        if (line == "end") {
            ended = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CorruptFile("malformed manifest line '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "param") {
            const auto space = value.find(' ');
            if (space == std::string::npos) throw CorruptFile("malformed param line '" + line + "'");
            m.params.emplace_back(value.substr(0, space), value.substr(space + 1));
        } else {
            m.fields[std::move(key)] = std::move(value);
        }
    }
    if (!ended) throw CorruptFile("checkpoint manifest is truncated");
    return m;
}

} // namespace

void write_checkpoint(std::ostream& out, const AefinModel& m, const CheckpointMeta& meta) {
    AefinModel copy = m;
    const autodiff::ParamSet params = copy.parameters();
    const ModelConfig& cfg = copy.config();

    std::string payload;
    payload.reserve(params.scalar_count() * 8);
    for (const auto& p : params) {
        for (double v : p.values) append_le(payload, v);
    }

    std::ostringstream manifest;
    manifest << kMagic << '\n'
             << "format_version=" << kCheckpointVersion << '\n'
             << "backbone=" << cfg.backbone << '\n'
             << "input_length=" << cfg.input_length << '\n'
             << "horizon=" << cfg.horizon << '\n'
             << "channels=" << cfg.channels << '\n'
             << "k=" << cfg.k << '\n'
             << "use_cross_attention=" << (cfg.ablation.use_cross_attention ? 1 : 0) << '\n'
             << "use_fan=" << (cfg.ablation.use_fan ? 1 : 0) << '\n'
             << "attention_projection=" << (cfg.attention_projection ? 1 : 0) << '\n'
             << "backbone_only=" << (cfg.backbone_only ? 1 : 0) << '\n'
             << "seed=" << meta.seed << '\n';
    if (meta.norm) {
        manifest << "norm_mean=" << join_hex(meta.norm->mean) << '\n' << "norm_std=" << join_hex(meta.norm->std) << '\n';
    }
    for (const auto& p : params) manifest << "param=" << p.name << ' ' << shape_text(p.shape) << '\n';
    manifest << "payload_bytes=" << payload.size() << '\n';
    std::array<char, 17> sum{};
    std::snprintf(sum.data(), sum.size(), "%016llx", static_cast<unsigned long long>(fnv1a(payload)));
    manifest << "payload_fnv1a64=" << sum.data() << '\n' << "end\n";

    out << manifest.str();
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("failed writing checkpoint");
}

void save_checkpoint(const std::string& path, const AefinModel& m, const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    write_checkpoint(out, m, meta);
}

LoadedCheckpoint read_checkpoint(std::istream& in) {
    const Manifest manifest = read_manifest(in);
    const auto version = manifest.get_uint("format_version");
    if (version != static_cast<std::uint64_t>(kCheckpointVersion)) {
        throw VersionMismatch("checkpoint format_version " + std::to_string(version) + ", this build reads " +
                              std::to_string(kCheckpointVersion));
    }

    ModelConfig cfg;
    cfg.backbone = manifest.get("backbone");
    cfg.input_length = manifest.get_uint("input_length");
    cfg.horizon = manifest.get_uint("horizon");
    cfg.channels = manifest.get_uint("channels");
    cfg.k = manifest.get_uint("k");
    cfg.ablation.use_cross_attention = manifest.get_flag("use_cross_attention");
    cfg.ablation.use_fan = manifest.get_flag("use_fan");
    cfg.attention_projection = manifest.get_flag("attention_projection");
    cfg.backbone_only = manifest.get_flag("backbone_only");

    CheckpointMeta meta;
    meta.seed = manifest.get_uint("seed");
    if (manifest.fields.count("norm_mean") != 0) {
        data::NormStats norm{parse_hex_list(manifest.get("norm_mean"), "norm_mean"),
                             parse_hex_list(manifest.get("norm_std"), "norm_std")};
        if (norm.mean.size() != cfg.channels || norm.std.size() != cfg.channels) {
            throw ShapeMismatch("checkpoint normalization stats do not match channel count");
        }
        meta.norm = std::move(norm);
    }

    AefinModel model = [&] {
        try {
            return AefinModel(cfg, 0, Init::zeros);
        } catch (const ConfigError& e) {
            throw CorruptFile(std::string("checkpoint describes an invalid model: ") + e.what());
        }
    }();
    const autodiff::ParamSet params = model.parameters();
    if (manifest.params.size() != params.size()) {
        throw ShapeMismatch("checkpoint lists " + std::to_string(manifest.params.size()) + " arrays, model has " +
                            std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [name, shape] = manifest.params[i];
        if (name != params[i].name || shape != shape_text(params[i].shape)) {
            throw ShapeMismatch("checkpoint array '" + name + "' " + shape + " does not match model array '" +
                                params[i].name + "' " + shape_text(params[i].shape));
        }
    }

    const auto payload_bytes = manifest.get_uint("payload_bytes");
    if (payload_bytes != params.scalar_count() * 8) {
        throw ShapeMismatch("checkpoint payload holds " + std::to_string(payload_bytes / 8) + " values, model needs " +
                            std::to_string(params.scalar_count()));
    }
    std::string payload(payload_bytes, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(payload_bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != payload_bytes) throw CorruptFile("checkpoint payload is truncated");
    if (in.peek() != std::char_traits<char>::eof()) throw CorruptFile("trailing bytes after checkpoint payload");

    const std::string& expected_sum = manifest.get("payload_fnv1a64");
    std::array<char, 17> sum{};
    std::snprintf(sum.data(), sum.size(), "%016llx", static_cast<unsigned long long>(fnv1a(payload)));
    if (expected_sum != sum.data()) throw CorruptFile("checkpoint payload checksum mismatch");

    std::size_t offset = 0;
    for (const auto& p : params) {
        for (double& v : p.values) {
            v = read_le(payload.data() + offset);
            offset += 8;
        }
    }
    return {std::move(model), std::move(meta)};
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in);
}

} // namespace aefin::model
